#include "lfun/specfun.hpp"

#include <algorithm>
#include <cmath>

namespace lfun {

namespace {

constexpr double kLog2 = 0.69314718055994530942;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log sqrt(2 pi)
constexpr double kLgHalf = 0.57236494292470008707;      // log Gamma(1/2)

bool near_int(double x, double tol) { return std::fabs(x - std::nearbyint(x)) <= tol; }

}  // namespace

LogComplex log_gamma(cxd z) {
  if (z.im == 0.0 && z.re <= 0.5 && near_int(z.re, 1e-12) && z.re <= 0.0)
    throw numerical_error("log_gamma: pole at nonpositive integer");

  double acc_re = 0.0, acc_im = 0.0;
  // log G(z) = log G(z+n) - sum log(z+j); push the argument to Re >= 20 where
  // Stirling has headroom for the 1e-12 contract
  while (z.re < 20.0) {
    double n2 = norm2(z);
    if (n2 < 1e-280) throw numerical_error("log_gamma: argument too close to a pole");
    acc_re -= 0.5 * std::log(n2);
    acc_im -= arg(z);
    z.re += 1.0;
  }

  cxd lz = log(z);
  cxd res = (z - cxd{0.5, 0.0}) * lz - z + cxd{kLogSqrt2Pi, 0.0};
  // B_{2j} / (2j (2j-1) z^{2j-1})
  static const double cj[] = {1.0 / 12,        -1.0 / 360,       1.0 / 1260,
                              -1.0 / 1680,     1.0 / 1188,       -691.0 / 360360,
                              1.0 / 156,       -3617.0 / 122400, 43867.0 / 244188};
  cxd w = cxd{1.0, 0.0} / z;
  cxd w2 = w * w;
  cxd p = w, s{};
  for (double c : cj) {
    s += p * c;
    p *= w2;
  }
  res += s;
  return {res.re + acc_re, res.im + acc_im};
}

// ---------------------------------------------------------------------------
// K Bessel with imaginary order: K_{ir}(x) = int_0^inf exp(-x cosh u) cos(ru) du.
// The integrand is even in u with superalgebraically small tails, so the
// trapezoid sum converges spectrally under interval halving.

namespace {

// mode 0: plain kernel; mode 1: extra factor -cosh(u) (d/dx of the kernel)
cxd bessel_trap(cxd r, double x, int mode) {
  double umax = std::acosh((x + 95.0) / x) + 1.0;
  auto g = [&](double u) -> cxd {
    double ch = std::cosh(u);
    double e = std::exp(-x * ch);
    if (mode == 1) e *= -ch;
    double a = r.re * u, b = r.im * u;
    double sa, ca;
    sincos(a, sa, ca);
    if (b == 0.0) return {e * ca, 0.0};
    return {e * ca * std::cosh(b), -e * sa * std::sinh(b)};
  };
  int n = 64;
  double h = umax / n;
  cxd sum = (g(0.0) + g(umax)) * 0.5;
  for (int j = 1; j < n; ++j) sum += g(j * h);
  cxd val = sum * h;
  int ok = 0;
  while (n < (1 << 18)) {
    // refine with midpoints
    cxd mid{};
    for (int j = 0; j < n; ++j) mid += g((j + 0.5) * h);
    cxd nv = (val + mid * h) * 0.5;
    n *= 2;
    h *= 0.5;
    double dn = norm2(nv - val);
    val = nv;
    if (dn <= 1e-26 * norm2(val) + 1e-300) {
      if (++ok >= 2) break;
    } else {
      ok = 0;
    }
  }
  return val;
}

}  // namespace

cxd bessel_k(cxd r, double x) {
  if (!(x > 0.0)) throw input_error("bessel_k: x must be positive");
  if (!(std::fabs(r.im) < 0.5)) throw input_error("bessel_k: need |Im r| < 1/2");
  return bessel_trap(r, x, 0);
}

Jet1<cxd> bessel_k_jet(cxd r, double x0, int order) {
  if (!(x0 > 0.0)) throw input_error("bessel_k_jet: x0 must be positive");
  if (!(std::fabs(r.im) < 0.5)) throw input_error("bessel_k_jet: need |Im r| < 1/2");
  if (order < 0) throw input_error("bessel_k_jet: negative order");
  Jet1<cxd> w(order);
  w[0] = bessel_trap(r, x0, 0);
  if (order >= 1) w[1] = bessel_trap(r, x0, 1);
  // x^2 K'' + x K' - (x^2 + nu^2) K = 0 with nu = ir
  cxd nu2 = -(r * r);
  for (int m = 0; m + 2 <= order; ++m) {
    cxd acc = w[m + 1] * (x0 * double(m + 1) * double(2 * m + 1));
    acc += w[m] * (cxd{double(m) * double(m) - x0 * x0, 0.0} - nu2);
    if (m >= 1) acc -= w[m - 1] * (2.0 * x0);
    if (m >= 2) acc -= w[m - 2];
    w[m + 2] = -acc / (x0 * x0 * double(m + 1) * double(m + 2));
  }
  return w;
}

// ---------------------------------------------------------------------------
// Hypergeometric

namespace sfdetail {

cxd hyp2f1_series(cxd a, cxd b, cxd c, cxd z) {
  if (c.im == 0.0 && c.re <= 0.0 && near_int(c.re, 1e-12))
    throw numerical_error("hyp2f1: c is a nonpositive integer");
  cxd term{1.0, 0.0}, sum{1.0, 0.0};
  int ok = 0;
  for (int l = 0; l < 200000; ++l) {
    double dl = double(l);
    cxd f = (a + dl) * (b + dl) * z / ((c + dl) * (dl + 1.0));
    term *= f;
    sum += term;
    if (norm2(term) > 1e280) throw numerical_error("hyp2f1: series overflow");
    if (norm2(term) <= 1e-34 * norm2(sum) && norm2(f) < 0.81) {
      if (++ok >= 2) return sum;
    } else {
      ok = 0;
    }
  }
  throw numerical_error("hyp2f1: series did not converge");
}

cxd hyp2f1_pfaff(cxd a, cxd b, cxd c, cxd z) {
  cxd one{1.0, 0.0};
  cxd zp = z / (z - one);
  return pow(one - z, -a) * hyp2f1_series(a, c - b, c, zp);
}

cxd hyp2f1_neg(cxd a, cxd b, cxd c, cxd z) {
  cxd one{1.0, 0.0};
  cxd bma = b - a;
  if (std::fabs(bma.im) < 1e-9 && near_int(bma.re, 1e-9))
    throw numerical_error("hyp2f1: degenerate connection formula (b - a integral)");
  cxd w = one / (one - z);
  LogComplex l1 = log_gamma(c);
  LogComplex k1 = lc_div(lc_mul(l1, log_gamma(bma)), lc_mul(log_gamma(b), log_gamma(c - a)));
  k1 = lc_mul(k1, lc_pow(one - z, -a));
  LogComplex k2 = lc_div(lc_mul(l1, log_gamma(a - b)), lc_mul(log_gamma(a), log_gamma(c - b)));
  k2 = lc_mul(k2, lc_pow(one - z, -b));
  if (k1.logmag > 690.0 || k2.logmag > 690.0)
    throw numerical_error("hyp2f1: connection coefficients overflow double range");
  cxd t1 = lc_value(k1) * hyp2f1_series(a, c - b, one + a - b, w);
  cxd t2 = lc_value(k2) * hyp2f1_series(b, c - a, one + b - a, w);
  return t1 + t2;
}

}  // namespace sfdetail

cxd hyp2f1(cxd a, cxd b, cxd c, cxd z) {
  if (z.re >= 1.0 && std::fabs(z.im) < 1e-14 * (1.0 + z.re))
    throw input_error("hyp2f1: argument on the branch cut [1, inf)");
  if (norm2(z) <= 0.5625) return sfdetail::hyp2f1_series(a, b, c, z);
  cxd zp = z / (z - cxd{1.0, 0.0});
  if (norm2(zp) <= 0.5625) return sfdetail::hyp2f1_pfaff(a, b, c, z);
  if (z.re <= -1.0 && std::fabs(z.im) <= 1e-12 * std::fabs(z.re))
    return sfdetail::hyp2f1_neg(a, b, c, z);
  throw numerical_error("hyp2f1: argument outside supported regions");
}

// ---------------------------------------------------------------------------
// Mellin transform of cos(T1 t) K_{ir}(t) against t^{iT - 1/2}:
//   2^{iT-3/2} G(A) G(B) F(A, B; 1/2; -T1^2),
//   A = (ir + iT + 1/2)/2,  B = (-ir + iT + 1/2)/2.
// Evaluated through the 1/(1-z) connection so the hypergeometric factors stay
// near 1; the Gamma ratios live in log space.

LogComplex mellin_cos_bessel(double T, double T1, cxd r) {
  if (!(T1 > 0.0)) throw input_error("mellin_cos_bessel: T1 must be positive");
  if (!(std::fabs(r.im) < 0.5)) throw input_error("mellin_cos_bessel: need |Im r| < 1/2");
  if (norm2(r) < 1e-16)
    throw numerical_error("mellin_cos_bessel: degenerate at r = 0 (Gamma(ir) pole)");

  cxd ir{-r.im, r.re};
  cxd iT{0.0, T};
  cxd half{0.5, 0.0};
  cxd A = (ir + iT + half) * 0.5;
  cxd B = (iT - ir + half) * 0.5;

  double w = 1.0 / (1.0 + T1 * T1);
  cxd wz{w, 0.0};
  cxd one{1.0, 0.0};
  cxd F1 = sfdetail::hyp2f1_series(A, (ir - iT + half) * 0.5, one + ir, wz);
  cxd F2 = sfdetail::hyp2f1_series(B, (half - ir - iT) * 0.5, one - ir, wz);

  LogComplex two_pow{-1.5 * kLog2, T * kLog2};
  LogComplex lg_half{kLgHalf, 0.0};
  double L = std::log1p(T1 * T1);

  cxd qD = (half + ir + iT) * (-0.5);
  LogComplex D = lc_mul(two_pow, log_gamma(A));
  D = lc_mul(D, lg_half);
  D = lc_mul(D, log_gamma(-ir));
  D = lc_mul(D, LogComplex{qD.re * L, qD.im * L});
  D = lc_div(D, log_gamma((half - ir - iT) * 0.5));

  cxd qE = (half - ir + iT) * (-0.5);
  LogComplex E = lc_mul(two_pow, log_gamma(B));
  E = lc_mul(E, lg_half);
  E = lc_mul(E, log_gamma(ir));
  E = lc_mul(E, LogComplex{qE.re * L, qE.im * L});
  E = lc_div(E, log_gamma((half + ir - iT) * 0.5));

  double mD = D.logmag + 0.5 * std::log(norm2(F1));
  double mE = E.logmag + 0.5 * std::log(norm2(F2));
  double m = std::max(mD, mE);
  if (!std::isfinite(m)) throw numerical_error("mellin_cos_bessel: vanishing result");
  cxd v = cis(D.arg) * (std::exp(D.logmag - m)) * F1 + cis(E.arg) * (std::exp(E.logmag - m)) * F2;
  double n2 = norm2(v);
  if (n2 == 0.0) throw numerical_error("mellin_cos_bessel: total cancellation");
  return {m + 0.5 * std::log(n2), arg(v)};
}

T1Choice select_T1(double T, cxd r) {
  if (!(T > 0.0)) throw input_error("select_T1: T must be positive");
  cxd ir{-r.im, r.re};
  cxd one{1.0, 0.0};
  double m1 = abs(one + ir), m2 = abs(one - ir);
  // first transformed-series term is ~ T^2 w / (4 |1 +- ir|); keep it <= 0.1
  double B = std::max(0.05, 1.0 / std::sqrt(0.4 * std::min(m1, m2)));

  double bestT1 = 0.0;
  LogComplex bestC{-1e308, 0.0};
  for (int j = 0; j < 64; ++j) {
    double c = B * std::pow(20.0, double(j) / 63.0);
    double T1 = c * T;
    LogComplex C = mellin_cos_bessel(T, T1, r);
    if (C.logmag > bestC.logmag) {
      bestC = C;
      bestT1 = T1;
    }
  }
  if (bestC.logmag + std::log(T) < std::log(0.05))
    throw selection_failure("select_T1: no candidate reaches |C(T1)| * T >= 0.05");
  return {bestT1, bestC};
}

}  // namespace lfun
