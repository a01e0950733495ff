#pragma once
// Double-double scalar: unevaluated sum hi + lo with |lo| <= ulp(hi)/2,
// giving ~106 significand bits in the exponent range of double.
// Error-free transformations (two_sum, fma-based two_prod) and the
// add/mul/div/sqrt compositions follow the standard QD-style recipes.

#include <cmath>
#include <cstdlib>
#include <limits>

namespace lfun {

namespace ddetail {

inline double two_sum(double a, double b, double &err) {
  double s = a + b;
  double bb = s - a;
  err = (a - (s - bb)) + (b - bb);
  return s;
}

// requires |a| >= |b| (or a == 0)
inline double quick_two_sum(double a, double b, double &err) {
  double s = a + b;
  err = b - (s - a);
  return s;
}

inline double two_prod(double a, double b, double &err) {
  double p = a * b;
  err = std::fma(a, b, -p);
  return p;
}

} // namespace ddetail

struct dd {
  double hi = 0.0;
  double lo = 0.0;

  constexpr dd() = default;
  constexpr dd(double h) : hi(h), lo(0.0) {}
  constexpr dd(double h, double l) : hi(h), lo(l) {}
};

inline constexpr dd dd_pi{3.141592653589793116e+00, 1.224646799147353207e-16};
inline constexpr dd dd_2pi{6.283185307179586232e+00, 2.449293598294706414e-16};
inline constexpr dd dd_pi_2{1.570796326794896558e+00, 6.123233995736766036e-17};
inline constexpr dd dd_ln2{6.931471805599452862e-01, 2.319046813846299558e-17};

inline double to_double(dd a) { return a.hi; }

inline dd operator-(dd a) { return {-a.hi, -a.lo}; }

inline dd operator+(dd a, dd b) {
  double s1, s2, t1, t2;
  s1 = ddetail::two_sum(a.hi, b.hi, s2);
  t1 = ddetail::two_sum(a.lo, b.lo, t2);
  s2 += t1;
  s1 = ddetail::quick_two_sum(s1, s2, s2);
  s2 += t2;
  s1 = ddetail::quick_two_sum(s1, s2, s2);
  return {s1, s2};
}

inline dd operator+(dd a, double b) {
  double s1, s2;
  s1 = ddetail::two_sum(a.hi, b, s2);
  s2 += a.lo;
  s1 = ddetail::quick_two_sum(s1, s2, s2);
  return {s1, s2};
}

inline dd operator+(double a, dd b) { return b + a; }

inline dd operator-(dd a, dd b) { return a + (-b); }
inline dd operator-(dd a, double b) { return a + (-b); }
inline dd operator-(double a, dd b) { return (-b) + a; }

inline dd operator*(dd a, dd b) {
  double p1, p2;
  p1 = ddetail::two_prod(a.hi, b.hi, p2);
  p2 += a.hi * b.lo + a.lo * b.hi;
  p1 = ddetail::quick_two_sum(p1, p2, p2);
  return {p1, p2};
}

inline dd operator*(dd a, double b) {
  double p1, p2;
  p1 = ddetail::two_prod(a.hi, b, p2);
  p2 += a.lo * b;
  p1 = ddetail::quick_two_sum(p1, p2, p2);
  return {p1, p2};
}

inline dd operator*(double a, dd b) { return b * a; }

inline dd sqr(dd a) {
  double p1, p2;
  p1 = ddetail::two_prod(a.hi, a.hi, p2);
  p2 += 2.0 * a.hi * a.lo;
  p2 += a.lo * a.lo;
  p1 = ddetail::quick_two_sum(p1, p2, p2);
  return {p1, p2};
}

inline dd operator/(dd a, dd b) {
  double q1 = a.hi / b.hi;
  dd r = a - b * q1;
  double q2 = r.hi / b.hi;
  r = r - b * q2;
  double q3 = r.hi / b.hi;
  double s, e;
  s = ddetail::quick_two_sum(q1, q2, e);
  return dd{s, e} + q3;
}

inline dd operator/(dd a, double b) { return a / dd{b}; }
inline dd operator/(double a, dd b) { return dd{a} / b; }

inline dd &operator+=(dd &a, dd b) { a = a + b; return a; }
inline dd &operator+=(dd &a, double b) { a = a + b; return a; }
inline dd &operator-=(dd &a, dd b) { a = a - b; return a; }
inline dd &operator-=(dd &a, double b) { a = a - b; return a; }
inline dd &operator*=(dd &a, dd b) { a = a * b; return a; }
inline dd &operator*=(dd &a, double b) { a = a * b; return a; }
inline dd &operator/=(dd &a, dd b) { a = a / b; return a; }
inline dd &operator/=(dd &a, double b) { a = a / b; return a; }

inline bool operator==(dd a, dd b) { return a.hi == b.hi && a.lo == b.lo; }
inline bool operator!=(dd a, dd b) { return !(a == b); }
inline bool operator<(dd a, dd b) { return a.hi < b.hi || (a.hi == b.hi && a.lo < b.lo); }
inline bool operator>(dd a, dd b) { return b < a; }
inline bool operator<=(dd a, dd b) { return !(b < a); }
inline bool operator>=(dd a, dd b) { return !(a < b); }
inline bool operator<(dd a, double b) { return a < dd{b}; }
inline bool operator>(dd a, double b) { return a > dd{b}; }
inline bool operator<=(dd a, double b) { return a <= dd{b}; }
inline bool operator>=(dd a, double b) { return a >= dd{b}; }

inline dd abs(dd a) { return a.hi < 0.0 ? -a : a; }
inline dd fabs(dd a) { return abs(a); }

// exact scaling by a power of two
inline dd mul_pwr2(dd a, double p) { return {a.hi * p, a.lo * p}; }

inline dd ldexp(dd a, int n) { return {std::ldexp(a.hi, n), std::ldexp(a.lo, n)}; }

inline dd floor(dd a) {
  double h = std::floor(a.hi);
  if (h != a.hi) return {h, 0.0};
  double l = std::floor(a.lo);
  double e;
  h = ddetail::quick_two_sum(h, l, e);
  return {h, e};
}

// round to nearest integer, ties resolved away from the fractional boundary
inline dd nint(dd a) {
  double h = std::nearbyint(a.hi);
  if (h == a.hi) {
    double l = std::nearbyint(a.lo);
    double e;
    h = ddetail::quick_two_sum(h, l, e);
    return {h, e};
  }
  if (std::abs(h - a.hi) == 0.5) {
    // the low word decides which side of the boundary the true value is on
    if (a.lo < 0.0 && h > a.hi) h -= 1.0;
    if (a.lo > 0.0 && h < a.hi) h += 1.0;
  }
  return {h, 0.0};
}

inline dd sqrt(dd a) {
  if (a.hi <= 0.0) {
    if (a.hi == 0.0 && a.lo == 0.0) return dd{0.0};
    return dd{std::numeric_limits<double>::quiet_NaN()};
  }
  // Karp: one Newton correction of the double seed, computed mostly in double
  double x = 1.0 / std::sqrt(a.hi);
  double ax = a.hi * x;
  dd r = a - sqr(dd{ax});
  return dd{ax} + r.hi * (x * 0.5);
}

namespace ddetail {
// 1/k! for k = 0..17, enough for the exp/sin/cos kernels below
inline const dd *inv_fact() {
  static const auto table = [] {
    struct {
      dd v[36];
    } t;
    double f = 1.0;
    t.v[0] = dd{1.0};
    for (int k = 1; k < 36; ++k) {
      f *= double(k);
      if (f < 9.0e15) {
        t.v[k] = dd{1.0} / dd{f}; // k! exact in double up to 18!
      } else {
        t.v[k] = t.v[k - 1] / double(k);
      }
    }
    return t;
  }();
  return table.v;
}
} // namespace ddetail

inline dd exp(dd a) {
  if (a.hi <= -745.0) return dd{0.0};
  if (a.hi >= 709.0) return dd{std::numeric_limits<double>::infinity()};
  // a = m ln2 + 512 r; exp(r) by Taylor, then 9 squarings, then 2^m
  double m = std::nearbyint(a.hi / dd_ln2.hi);
  dd r = mul_pwr2(a - dd_ln2 * m, 1.0 / 512.0);
  const dd *ifac = ddetail::inv_fact();
  dd p = sqr(r);
  dd s = r + mul_pwr2(p, 0.5); // r + r^2/2
  p = p * r;
  dd t = p * ifac[3];
  int i = 3;
  for (;;) {
    s = s + t;
    if (std::abs(t.hi) < 1e-40 || i >= 14) break;
    p = p * r;
    ++i;
    t = p * ifac[i];
  }
  // s = expm1(r); square up: expm1(2u) = 2 expm1(u) + expm1(u)^2
  for (int j = 0; j < 9; ++j) s = mul_pwr2(s, 2.0) + sqr(s);
  s = s + 1.0;
  return ldexp(s, int(m));
}

inline dd log(dd a) {
  if (a.hi <= 0.0) return dd{std::numeric_limits<double>::quiet_NaN()};
  // Newton on y -> y + a e^{-y} - 1 doubles the 53-bit seed
  dd x{std::log(a.hi)};
  x = x + a * exp(-x) - 1.0;
  return x;
}

namespace ddetail {
// |r| <= pi/4 + eps
inline void sincos_taylor(dd r, dd &s, dd &c) {
  const dd *ifac = inv_fact();
  dd x2 = sqr(r);
  dd ps, pc;
  dd rs = r, rc = dd{1.0};
  dd rpow_s = r, rpow_c = dd{1.0};
  for (int m = 1; m <= 17; ++m) {
    rpow_c = rpow_c * x2;
    rpow_s = rpow_s * x2;
    pc = rpow_c * ifac[2 * m];
    ps = rpow_s * ifac[2 * m + 1];
    if (m & 1) {
      rc = rc - pc;
      rs = rs - ps;
    } else {
      rc = rc + pc;
      rs = rs + ps;
    }
    if (std::abs(ps.hi) < 1e-40 && std::abs(pc.hi) < 1e-40) break;
  }
  s = rs;
  c = rc;
}
} // namespace ddetail

inline void sincos(dd a, dd &s, dd &c) {
  // reduce mod 2*pi, then mod pi/2
  dd z = nint(a / dd_2pi);
  dd r = a - dd_2pi * z;
  dd qd = nint(r / dd_pi_2.hi);
  r = r - dd_pi_2 * qd.hi;
  int j = int(qd.hi) & 3;
  dd ts, tc;
  ddetail::sincos_taylor(r, ts, tc);
  switch (j) {
    case 0: s = ts; c = tc; break;
    case 1: s = tc; c = -ts; break;
    case 2: s = -ts; c = -tc; break;
    default: s = -tc; c = ts; break;
  }
}

inline dd sin(dd a) {
  dd s, c;
  sincos(a, s, c);
  return s;
}

inline dd cos(dd a) {
  dd s, c;
  sincos(a, s, c);
  return c;
}

inline dd atan2(dd y, dd x) {
  if (x.hi == 0.0 && x.lo == 0.0 && y.hi == 0.0 && y.lo == 0.0) return dd{0.0};
  // Newton on f(t) = x sin t - y cos t from the double seed; the seed picks
  // the correct quadrant, one step doubles its precision
  dd th{std::atan2(y.hi, x.hi)};
  dd s, c;
  sincos(th, s, c);
  th = th + (y * c - x * s) / (x * c + y * s);
  return th;
}

inline dd atan(dd a) { return atan2(a, dd{1.0}); }

inline dd pow(dd a, dd b) { return exp(b * log(a)); }
inline dd pow(dd a, double b) { return exp(log(a) * b); }

inline bool isfinite(dd a) { return std::isfinite(a.hi); }

} // namespace lfun
