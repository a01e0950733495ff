#pragma once

// Cusp form data and evaluation of the group lift together with its local
// Taylor expansions.  The lift of a weight-k holomorphic form f is
//
//   F(g) = j(g, i)^{-k} * f(g.i),   j([[a,b],[c,d]], z) = cz + d,
//
// which is invariant under integer unimodular left translation.  Weight-0
// (Maass) forms lift by plain evaluation at g.i.  All Taylor data is taken
// in right coordinates g n(tau) a(ups) K(theta); the theta direction is
// exact (character e^{ik theta}), so only (tau, ups) jets carry real work.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lfun/cx.hpp"
#include "lfun/errors.hpp"
#include "lfun/geometry.hpp"
#include "lfun/jet.hpp"
#include "lfun/specfun.hpp"

namespace lfun {

enum class FormKind { holomorphic, maass };

struct Form {
  FormKind kind = FormKind::holomorphic;
  int weight = 0;  // k; 0 for Maass
  int level = 1;   // only level 1 is accepted
  double r = 0.0;  // spectral parameter (Maass only)
  // Fricke/reflection data: f(i C1 / t) behaves like C2 * (t/sqrt(C1))^k f(i t / C1)
  // on the imaginary axis; used for truncation envelopes, not for evaluation.
  double fricke_c1 = 1.0;
  cxd fricke_c2{1.0, 0.0};
  std::vector<double> coeffs;  // coeffs[n-1] = n-th Fourier coefficient
  bool coeffs_exact = false;   // all coefficients integer-representable
  double deriv_bound_r = 0.0;  // optional declared derivative scale (0 = unset)
  bool automorphic = true;     // false only for synthetic test data: the
                               // coefficient list is not a real cusp form, so
                               // reduction-based shortcuts must not be used
};

// Strict parse: unknown keys are rejected, holomorphic forms need even
// weight >= 4 and no spectral parameter, Maass forms need weight 0 and r.
Form load_form(const std::string &path);
Form parse_form_json(const std::string &text);

// Ramanujan tau via the 24th power of the pentagonal-number series, exact
// integer arithmetic throughout.  digits[n-1] is the decimal string of
// tau(n); value[n-1] the nearest double.
struct DeltaTable {
  std::vector<std::string> digits;
  std::vector<double> value;
};
DeltaTable gen_delta(int n_max);

// Writes a complete form file for the discriminant cusp form with n_max
// exact integer coefficients.
void write_delta_form(const std::string &path, int n_max);

// Number of q-expansion terms needed for absolute accuracy `acc` at height y.
int n_terms(double y, double acc);
// Same, but safe against the n^order amplification inside order-th Taylor
// coefficients.
int n_terms_jet(double y, double acc, int order);

struct MultiIndex {
  int b1 = 0, b2 = 0, b3 = 0;
  int total() const { return b1 + b2 + b3; }
};

struct CurveSpec {
  enum Kind { n_flow, omega_flow };
  Kind kind = n_flow;
  double big_t = 0.0;  // omega_flow: the scaling parameter in 1 + u/big_t
};

namespace fdetail {

// Synthetic data (automorphic = false) is defined by its finite coefficient
// list, so a request past the end just truncates; a real form must cover the
// tail the target accuracy demands.
inline int clamp_need(const Form &f, int need) {
  if (need > static_cast<int>(f.coeffs.size())) {
    if (f.automorphic)
      throw input_error("insufficient coefficients: need " + std::to_string(need) +
                        ", form has " + std::to_string(f.coeffs.size()));
    need = static_cast<int>(f.coeffs.size());
  }
  return need;
}

// Univariate Moebius expansion of g.(w0 + delta) at w0 = i.
template <class R> struct MoebiusJet {
  Cx<R> z0;        // g.i
  Cx<R> den0;      // j(g, i) = c i + d
  Cx<R> dq;        // g.c / den0: den(delta) = den0 (1 + dq delta)
  Jet1<Cx<R>> dz;  // z(delta) - z0, order nd, dz[0] = 0
};

template <class R>
MoebiusJet<R> moebius_jet(const Mat2<R> &g, int nd) {
  MoebiusJet<R> mj;
  Cx<R> num0{g.b, g.a};
  mj.den0 = Cx<R>{g.d, g.c};
  R d2 = mj.den0.re * mj.den0.re + mj.den0.im * mj.den0.im;
  if (!(dbl(d2) > 0)) throw numerical_error("moebius_jet: singular denominator");
  mj.z0 = num0 / mj.den0;
  mj.dq = Cx<R>{g.c, R(0.0)} / mj.den0;

  Jet1<Cx<R>> num(nd), den(nd);
  num.c[0] = num0;
  den.c[0] = mj.den0;
  if (nd >= 1) {
    num.c[1] = Cx<R>{g.a, R(0.0)};
    den.c[1] = Cx<R>{g.c, R(0.0)};
  }
  Jet1<Cx<R>> z = num / den;
  z.c[0] = Cx<R>{};
  mj.dz = z;
  return mj;
}

// (1 + q delta)^{-k} as a jet in delta, exact binomial coefficients
template <class R>
Jet1<Cx<R>> neg_pow_jet(Cx<R> q, int k, int nd) {
  Jet1<Cx<R>> jf(nd);
  jf.c[0] = Cx<R>{R(1.0)};
  Cx<R> pw{R(1.0)};
  double bin = 1.0;
  for (int m = 1; m <= nd; ++m) {
    bin *= -static_cast<double>(k + m - 1) / m;  // C(-k, m)
    pw *= q;
    jf.c[m] = pw * R(bin);
  }
  return jf;
}

// Distributes a univariate jet in delta = tau + i(e^ups - 1) onto the
// rectangular (tau, ups) grid: delta^m = sum_j binom(m,j) tau^j Y_{m-j},
// Y_p = (i(e^ups - 1))^p.  Y_p vanishes below ups-order p, so only p <= ny
// contributes.
template <class R>
void expand_delta(const Jet1<Cx<R>> &g, RectJet2<Cx<R>> &out) {
  const int nt = out.nt, ny = out.ny;
  const int nd = g.order();
  out.clear();

  // Y_p as ups-jets, p = 0..ny
  std::vector<Jet1<Cx<R>>> ypow(static_cast<size_t>(ny) + 1, Jet1<Cx<R>>(ny));
  ypow[0].c[0] = Cx<R>{R(1.0)};
  if (ny >= 1) {
    Jet1<Cx<R>> y1(ny);  // i(e^ups - 1)
    R fact = R(1.0);
    for (int j = 1; j <= ny; ++j) {
      fact = fact * R(1.0 / j);
      y1.c[j] = Cx<R>{R(0.0), fact};
    }
    for (int p = 1; p <= ny; ++p) ypow[p] = ypow[p - 1] * y1;
  }

  // binom rows kept as doubles; nd stays well under overflow range
  std::vector<double> binom(static_cast<size_t>(nd) + 1);
  binom[0] = 1.0;
  for (int m = 0; m <= nd; ++m) {
    for (int j = m; j >= 1; --j) binom[j] += binom[j - 1];  // row update
    if (m == 0) binom[0] = 1.0;
    for (int j = std::max(0, m - ny); j <= std::min(m, nt); ++j) {
      const Jet1<Cx<R>> &yp = ypow[m - j];
      Cx<R> coef = g.c[m] * R(binom[static_cast<size_t>(j)]);
      for (int q = m - j; q <= ny; ++q) out.at(j, q) += coef * yp.c[q];
    }
  }
}

// Full product of two rectangular jets truncated to (nt, ny).  Used only on
// the Maass path and in tests; the fast pipelines never call it.
template <class S>
RectJet2<S> rect_mul(const RectJet2<S> &a, const RectJet2<S> &b) {
  RectJet2<S> r(a.nt, a.ny);
  for (int i1 = 0; i1 <= a.nt; ++i1)
    for (int j1 = 0; j1 <= a.ny; ++j1) {
      S av = a.at(i1, j1);
      if (norm2(av) == 0) continue;
      for (int i2 = 0; i2 + i1 <= a.nt; ++i2)
        for (int j2 = 0; j2 + j1 <= a.ny; ++j2)
          r.at(i1 + i2, j1 + j2) += av * b.at(i2, j2);
    }
  return r;
}

// sum_m series[m] * d^m with d a rect jet of vanishing constant term.
template <class S>
RectJet2<S> rect_compose_scalar(const Jet1<S> &series, const RectJet2<S> &d) {
  RectJet2<S> acc(d.nt, d.ny);
  int top = std::min(series.order(), d.nt + d.ny);
  acc.at(0, 0) = series.c[top];
  for (int m = top - 1; m >= 0; --m) {
    acc = rect_mul(acc, d);
    acc.at(0, 0) += series.c[m];
  }
  return acc;
}

}  // namespace fdetail

// Bivariate Taylor jet of F(g n(tau) a(ups)) at (tau, ups) = (0, 0), with
// tau-order nt and ups-order ny.  acc is the target absolute accuracy of the
// underlying coefficient sums (jet orders raise the term count as needed).
template <class R>
RectJet2<Cx<R>> lift_rect_jet(const Form &f, const Mat2<R> &g, int nt, int ny,
                              double acc) {
  using std::exp;
  const int nd = nt + ny;
  fdetail::MoebiusJet<R> mj = fdetail::moebius_jet(g, nd);
  double y0 = dbl(mj.z0.im);
  if (!(y0 > 1e-12)) throw numerical_error("lift point too close to the boundary");

  RectJet2<Cx<R>> rect(nt, ny);

  if (f.kind == FormKind::holomorphic) {
    int need = fdetail::clamp_need(f, n_terms_jet(y0, acc, nd));
    // q-sum of jets: e(n z) = e(n z0) exp(2 pi i n dz)
    Jet1<Cx<R>> total(nd);
    Jet1<Cx<R>> ph(nd);
    for (int n = need; n >= 1; --n) {  // ascending magnitude
      double an = f.coeffs[static_cast<size_t>(n) - 1];
      if (an == 0.0) continue;
      for (int m = 1; m <= nd; ++m) ph.c[m] = mj.dz.c[m] * Cx<R>{R(0.0), R(2.0 * kPi * n)};
      Jet1<Cx<R>> en = lfun::exp(ph);
      R e2 = exp(R(-2.0 * kPi * n) * mj.z0.im);
      R arg = R(2.0 * kPi * n) * mj.z0.re;
      R cs, sn;
      sincos(arg, sn, cs);
      Cx<R> scale = Cx<R>{cs * e2, sn * e2} * R(an);
      for (int m = 0; m <= nd; ++m) total.c[m] += scale * en.c[m];
    }
    // automorphy: (den0 + c delta)^{-k} = den0^{-k} (1 + (c/den0) delta)^{-k}
    total = total * fdetail::neg_pow_jet(mj.dq, f.weight, nd);
    Cx<R> d0k = powi(Cx<R>{R(1.0)} / mj.den0, f.weight);
    for (int m = 0; m <= nd; ++m) total.c[m] *= d0k;

    fdetail::expand_delta(total, rect);

    if (ny >= 1 && f.weight != 0) {
      // right a(ups) rescales j by e^{-ups/2}: weight factor e^{k ups / 2}
      Jet1<Cx<R>> ek(ny);
      R fact{R(1.0)};
      ek.c[0] = Cx<R>{R(1.0)};
      for (int j = 1; j <= ny; ++j) {
        fact = fact * R(0.5 * f.weight / j);
        ek.c[j] = Cx<R>{fact, R(0.0)};
      }
      rect.mul_yjet(ek);
    }
    return rect;
  }

  // Maass: F = sum a_n 2 sqrt(n y) K_{ir}(2 pi n y) cos(2 pi n x), a real-
  // analytic function of (x, y).  z and conj(z) are both Moebius images of
  // w = tau + i e^ups, so the rectangular jets of x and y are the entrywise
  // real and imaginary parts of the z jet.
  int need = fdetail::clamp_need(f, n_terms_jet(y0, acc, nd));

  RectJet2<Cx<R>> zrect(nt, ny);
  fdetail::expand_delta(mj.dz, zrect);
  RectJet2<Cx<R>> dx(nt, ny), dy(nt, ny);
  for (int i = 0; i <= nt; ++i)
    for (int j = 0; j <= ny; ++j) {
      Cx<R> zv = zrect.at(i, j);
      dx.at(i, j) = Cx<R>{zv.re, R(0.0)};
      dy.at(i, j) = Cx<R>{zv.im, R(0.0)};
    }
  double x0 = dbl(mj.z0.re);

  cxd rr{f.r, 0.0};
  for (int n = 1; n <= need; ++n) {
    double an = f.coeffs[static_cast<size_t>(n) - 1];
    if (an == 0.0) continue;
    double s = 2.0 * kPi * n;
    // K_{ir}(s(y0 + dy)): univariate seed series at s*y0
    Jet1<cxd> kser = bessel_k_jet(rr, s * y0, nd);
    Jet1<Cx<R>> kserR(nd);
    double p = 1.0;
    for (int m = 0; m <= nd; ++m) {
      kserR.c[m] = Cx<R>{R(kser.c[m].re * p), R(kser.c[m].im * p)};
      p *= s;  // chain factor for argument s*dy
    }
    RectJet2<Cx<R>> kj = fdetail::rect_compose_scalar(kserR, dy);
    // sqrt(n(y0+dy)) via binomial series around n*y0
    Jet1<Cx<R>> sser(nd);
    {
      Jet1<R> lin(nd);
      lin.c[0] = R(y0);
      if (nd >= 1) lin.c[1] = R(1.0);
      Jet1<R> sq = pow_jet(lin, 0.5);
      double sn = std::sqrt(static_cast<double>(n));
      for (int m = 0; m <= nd; ++m) sser.c[m] = Cx<R>{sq.c[m] * R(sn), R(0.0)};
    }
    RectJet2<Cx<R>> sj = fdetail::rect_compose_scalar(sser, dy);
    // cos(s(x0 + dx)) = Re of e^{i s x0} e^{i s dx}
    Jet1<Cx<R>> eser(nd);
    {
      R cs, snn;
      sincos(R(s * x0), snn, cs);
      Cx<R> rot{cs, snn};
      Cx<R> step{R(0.0), R(s)};
      Cx<R> acc = rot;
      for (int m = 0; m <= nd; ++m) {
        eser.c[m] = acc;
        acc = acc * step * R(1.0 / (m + 1));
      }
    }
    RectJet2<Cx<R>> ej = fdetail::rect_compose_scalar(eser, dx);
    for (int i = 0; i <= nt; ++i)
      for (int j = 0; j <= ny; ++j) ej.at(i, j) = Cx<R>{ej.at(i, j).re, R(0.0)};

    RectJet2<Cx<R>> term = fdetail::rect_mul(fdetail::rect_mul(sj, kj), ej);
    for (int i = 0; i <= nt; ++i)
      for (int j = 0; j <= ny; ++j) rect.at(i, j) += term.at(i, j) * R(2.0 * an);
  }
  return rect;
}

// Lift value at a single group element.
template <class R>
Cx<R> lift_value(const Form &f, const Mat2<R> &g, double acc) {
  using std::exp;
  if (f.kind == FormKind::holomorphic) {
    fdetail::MoebiusJet<R> mj = fdetail::moebius_jet(g, 0);
    double y0 = dbl(mj.z0.im);
    if (!(y0 > 1e-12)) throw numerical_error("lift point too close to the boundary");
    int need = fdetail::clamp_need(f, n_terms(y0, acc));
    Cx<R> s{};
    for (int n = need; n >= 1; --n) {
      double an = f.coeffs[static_cast<size_t>(n) - 1];
      if (an == 0.0) continue;
      R e2 = exp(R(-2.0 * kPi * n) * mj.z0.im);
      R arg = R(2.0 * kPi * n) * mj.z0.re;
      R cs, sn;
      sincos(arg, sn, cs);
      s += Cx<R>{cs * e2, sn * e2} * R(an);
    }
    return s * powi(Cx<R>{R(1.0)} / mj.den0, f.weight);
  }
  RectJet2<Cx<R>> rect = lift_rect_jet(f, g, 0, 0, acc);
  return rect.at(0, 0);
}

// Univariate Taylor jet in h of F(g m(h)) for a flow whose chart motion is
// affine: (g m(h)).i is the Moebius image of w(h) = i + cw h, and
// j(m(h), i) = (1 + h/ws)^{-1/2} when ws > 0 (else j = 1).  This covers
//   n-flow:      m(h) = n(h),           cw = 1,                    ws = 0
//   omega-flow:  m(h) = omega(u0)^{-1} omega(u0+h),
//                cw = (-big_t + i)/(big_t + u0),  ws = big_t + u0.
// Much cheaper than a rectangular jet: everything stays univariate in h.
template <class R>
Jet1<Cx<R>> lift_flow_jet(const Form &f, const Mat2<R> &g, Cx<R> cw, double ws,
                          int n, double acc) {
  using std::exp;
  Cx<R> num0{g.b, g.a}, den0{g.d, g.c};
  if (!(dbl(norm2(den0)) > 0)) throw numerical_error("lift_flow_jet: singular chart");
  Cx<R> z0 = num0 / den0;
  double y0 = dbl(z0.im);
  if (!(y0 > 1e-12)) throw numerical_error("lift point too close to the boundary");

  Jet1<Cx<R>> num(n), den(n);
  num.c[0] = num0;
  den.c[0] = den0;
  if (n >= 1) {
    num.c[1] = Cx<R>{g.a, R(0.0)} * cw;
    den.c[1] = Cx<R>{g.c, R(0.0)} * cw;
  }
  Jet1<Cx<R>> dz = num / den;
  dz.c[0] = Cx<R>{};

  int need = fdetail::clamp_need(f, n_terms_jet(y0, acc, n));

  Jet1<Cx<R>> total(n);
  if (f.kind == FormKind::holomorphic) {
    Jet1<Cx<R>> ph(n);
    for (int m = need; m >= 1; --m) {
      double am = f.coeffs[static_cast<size_t>(m) - 1];
      if (am == 0.0) continue;
      for (int q = 1; q <= n; ++q) ph.c[q] = dz.c[q] * Cx<R>{R(0.0), R(kTwoPi * m)};
      Jet1<Cx<R>> en = lfun::exp(ph);
      R e2 = exp(R(-kTwoPi * m) * z0.im);
      R cs, sn;
      sincos(R(kTwoPi * m) * z0.re, sn, cs);
      Cx<R> scale = Cx<R>{cs * e2, sn * e2} * R(am);
      for (int q = 0; q <= n; ++q) total.c[q] += scale * en.c[q];
    }
    // automorphy along the flow: j(g, w(h))^{-k} = den(h)^{-k}, then the
    // flow's own factor (1 + h/ws)^{k/2}
    Cx<R> dq = (n >= 1) ? den.c[1] / den0 : Cx<R>{};
    total = total * fdetail::neg_pow_jet(dq, f.weight, n);
    Cx<R> d0k = powi(Cx<R>{R(1.0)} / den0, f.weight);
    for (auto &cv : total.c) cv *= d0k;
    if (ws > 0.0 && f.weight != 0) {
      Jet1<R> lin(n);
      lin.c[0] = R(1.0);
      if (n >= 1) lin.c[1] = R(1.0 / ws);
      Jet1<R> wf = pow_jet(lin, 0.5 * f.weight);
      Jet1<Cx<R>> wfc(n);
      for (int q = 0; q <= n; ++q) wfc.c[q] = Cx<R>{wf.c[q], R(0.0)};
      total = total * wfc;
    }
    return total;
  }

  // Maass: compose the K-Bessel, sqrt and cosine series with the real jets
  // x(h), y(h) (h is real, so these are the entrywise parts of dz).
  Jet1<Cx<R>> dxj(n), dyj(n);
  for (int q = 1; q <= n; ++q) {
    dxj.c[q] = Cx<R>{dz.c[q].re, R(0.0)};
    dyj.c[q] = Cx<R>{dz.c[q].im, R(0.0)};
  }
  double x0 = dbl(z0.re);
  cxd rr{f.r, 0.0};
  for (int m = 1; m <= need; ++m) {
    double am = f.coeffs[static_cast<size_t>(m) - 1];
    if (am == 0.0) continue;
    double s = kTwoPi * m;
    Jet1<cxd> kser = bessel_k_jet(rr, s * y0, n);
    Jet1<Cx<R>> kserR(n);
    double pfac = 1.0;
    for (int q = 0; q <= n; ++q) {
      kserR.c[q] = Cx<R>{R(kser.c[q].re * pfac), R(kser.c[q].im * pfac)};
      pfac *= s;
    }
    Jet1<Cx<R>> kj = lfun::compose(kserR, dyj);
    Jet1<Cx<R>> sser(n);
    {
      Jet1<R> lin(n);
      lin.c[0] = R(y0);
      if (n >= 1) lin.c[1] = R(1.0);
      Jet1<R> sq = pow_jet(lin, 0.5);
      double sn = std::sqrt(static_cast<double>(m));
      for (int q = 0; q <= n; ++q) sser.c[q] = Cx<R>{sq.c[q] * R(sn), R(0.0)};
    }
    Jet1<Cx<R>> sj = lfun::compose(sser, dyj);
    Jet1<Cx<R>> ephase(n);
    for (int q = 1; q <= n; ++q) ephase.c[q] = dxj.c[q] * Cx<R>{R(0.0), R(s)};
    Jet1<Cx<R>> ej = lfun::exp(ephase);
    {
      R cs, snn;
      sincos(R(s * x0), snn, cs);
      Cx<R> rot{cs, snn};
      for (auto &cv : ej.c) cv *= rot;
    }
    for (auto &cv : ej.c) cv = Cx<R>{cv.re, R(0.0)};  // cos = Re, h real
    Jet1<Cx<R>> term = sj * kj * ej;
    for (int q = 0; q <= n; ++q) total.c[q] += term.c[q] * R(2.0 * am);
  }
  return total;
}

// Simplex jet of F(x n(t) a(y) K(theta)) to total order d.  The theta
// dependence is the exact character e^{ik theta}, so layer b3 is the (b1,b2)
// rectangular jet scaled by (ik)^{b3} / b3!.
template <class R>
Jet3<Cx<R>> lift_jet3(const Form &f, const Mat2<R> &x, int d, double acc) {
  RectJet2<Cx<R>> rect = lift_rect_jet(f, x, d, d, acc);
  Jet3<Cx<R>> out(d);
  Cx<R> ik{R(0.0), R(static_cast<double>(f.weight))};
  Cx<R> fac{R(1.0)};
  for (int b3 = 0; b3 <= d; ++b3) {
    if (b3 > 0) fac = fac * ik * R(1.0 / b3);
    if (f.kind == FormKind::maass && b3 > 0) break;  // weight 0: K-invariant
    for (int b1 = 0; b1 + b3 <= d; ++b1)
      for (int b2 = 0; b1 + b2 + b3 <= d; ++b2)
        out.at(b1, b2, b3) = rect.at(b1, b2) * fac;
  }
  return out;
}

// Taylor jet in u of (D^beta F)(x c(u0 + u)) for a horocycle flow
// c(u) = n(u) or the expanding flow c(u) = omega(u) = [[s, -u/s], [0, 1/s]],
// s = sqrt(1 + u/big_t).  Exact flow decompositions:
//   n-flow:      x n(u0 + u) = (x n(u0)) n(u)
//   omega-flow:  x omega(u0+u) = (x omega(u0)) n(t(u)) a(y(u)),
//                t(u) = -u / (1 + u0/big_t),  y(u) = log(1 + u/(big_t + u0)).
template <class R>
Jet1<Cx<R>> curve_taylor(const Form &f, const Mat2<R> &x, MultiIndex beta,
                         CurveSpec curve, double u0, int n, double acc) {
  Cx<R> thfac = powi(Cx<R>{R(0.0), R(static_cast<double>(f.weight))}, beta.b3);
  if (f.kind == FormKind::maass && beta.b3 > 0) return Jet1<Cx<R>>(n);

  if (curve.kind == CurveSpec::n_flow) {
    Mat2<R> g = x * mat_n(R(u0));
    RectJet2<Cx<R>> rect = lift_rect_jet(f, g, beta.b1 + n, beta.b2, acc);
    Jet1<Cx<R>> out = rect.shifted_tjet(beta.b1, beta.b2, n);
    for (auto &cv : out.c) cv *= thfac;
    return out;
  }

  if (!(curve.big_t > 0.0)) throw input_error("omega flow needs big_t > 0");
  if (!(1.0 + u0 / curve.big_t > 0.0)) throw input_error("omega flow leaves the chart");
  Mat2<R> g = x * mat_omega(R(u0), R(curve.big_t));
  RectJet2<Cx<R>> rect = lift_rect_jet(f, g, beta.b1 + n, beta.b2 + n, acc);

  // (D^beta F)(g n(t) a(y)) = e^{b1 y} (D_t^{b1} D_y^{b2} Phi)(t, y) * theta factor
  RectJet2<Cx<R>> dphi(n, n);
  {
    double f1 = 1.0, f2 = 1.0;
    for (int q = 1; q <= beta.b1; ++q) f1 *= q;
    for (int q = 1; q <= beta.b2; ++q) f2 *= q;
    for (int i = 0; i <= n; ++i) {
      double c1 = f1;
      for (int q = 1; q <= i; ++q) c1 = c1 * (beta.b1 + q) / q;
      for (int j = 0; j <= n; ++j) {
        double c2 = f2;
        for (int q = 1; q <= j; ++q) c2 = c2 * (beta.b2 + q) / q;
        dphi.at(i, j) = rect.at(i + beta.b1, j + beta.b2) * R(c1 * c2);
      }
    }
  }

  double den = curve.big_t + u0;
  Jet1<Cx<R>> tj(n), yj(n);
  if (n >= 1) tj.c[1] = Cx<R>{R(-1.0 / (1.0 + u0 / curve.big_t)), R(0.0)};
  double pw = 1.0;
  for (int m = 1; m <= n; ++m) {
    pw /= den;
    yj.c[m] = Cx<R>{R(((m & 1) ? 1.0 : -1.0) * pw / m), R(0.0)};
  }
  Jet1<Cx<R>> out = dphi.compose2(tj, yj);
  if (beta.b1 > 0) {
    Jet1<Cx<R>> ey = yj;
    for (auto &cv : ey.c) cv *= R(static_cast<double>(beta.b1));
    out = out * lfun::exp(ey);
  }
  for (auto &cv : out.c) cv *= thfac;
  return out;
}

// Derivative scale estimate: max over quasi-random fundamental-domain points
// and 1 <= |beta| <= d of |D^beta F / F-scale|^{1/|beta|}, clamped to >= 1.
double estimate_R(const Form &f, int d = 3);

}  // namespace lfun
