#pragma once
// Complex type templated over the real scalar (double or dd).  std::complex
// is only specified for the builtin floating types, so the dd instantiation
// needs its own; keeping one template for both paths keeps the numerics
// identical between precision modes.

#include <cmath>
#include <type_traits>

#include "lfun/dd.hpp"

namespace lfun {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 6.28318530717958647692;

// generic scalar shims so templated code can call one spelling for both reals
inline void sincos(double a, double &s, double &c) {
  s = std::sin(a);
  c = std::cos(a);
}

inline double dbl(double x) { return x; }
inline double dbl(dd x) { return x.hi; }

template <class R>
struct Cx {
  R re{};
  R im{};

  constexpr Cx() = default;
  constexpr Cx(R r) : re(r), im(R(0.0)) {}
  constexpr Cx(R r, R i) : re(r), im(i) {}
};

using cxd = Cx<double>;

template <class R> Cx<R> operator-(Cx<R> a) { return {-a.re, -a.im}; }

template <class R> Cx<R> operator+(Cx<R> a, Cx<R> b) { return {a.re + b.re, a.im + b.im}; }
template <class R> Cx<R> operator-(Cx<R> a, Cx<R> b) { return {a.re - b.re, a.im - b.im}; }

template <class R> Cx<R> operator*(Cx<R> a, Cx<R> b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

template <class R> Cx<R> operator+(Cx<R> a, R b) { return {a.re + b, a.im}; }
template <class R> Cx<R> operator+(R a, Cx<R> b) { return {a + b.re, b.im}; }
template <class R> Cx<R> operator-(Cx<R> a, R b) { return {a.re - b, a.im}; }
template <class R> Cx<R> operator-(R a, Cx<R> b) { return {a - b.re, -b.im}; }
template <class R> Cx<R> operator*(Cx<R> a, R b) { return {a.re * b, a.im * b}; }
template <class R> Cx<R> operator*(R a, Cx<R> b) { return {a * b.re, a * b.im}; }

// mixed double scalars for the non-double instantiations, so generic code
// can scale by plain literals
template <class R>
  requires(!std::is_same_v<R, double>)
Cx<R> operator*(Cx<R> a, double b) { return {a.re * b, a.im * b}; }
template <class R>
  requires(!std::is_same_v<R, double>)
Cx<R> operator*(double a, Cx<R> b) { return {b.re * a, b.im * a}; }

template <class R> Cx<R> conj(Cx<R> a) { return {a.re, -a.im}; }
template <class R> R norm2(Cx<R> a) { return a.re * a.re + a.im * a.im; }

template <class R> Cx<R> operator/(Cx<R> a, R b) { return {a.re / b, a.im / b}; }

template <class R> Cx<R> operator/(Cx<R> a, Cx<R> b) {
  R d = norm2(b);
  return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
}

template <class R> Cx<R> operator/(R a, Cx<R> b) { return Cx<R>{a} / b; }

template <class R> Cx<R> &operator+=(Cx<R> &a, Cx<R> b) { a = a + b; return a; }
template <class R> Cx<R> &operator-=(Cx<R> &a, Cx<R> b) { a = a - b; return a; }
template <class R> Cx<R> &operator*=(Cx<R> &a, Cx<R> b) { a = a * b; return a; }
template <class R> Cx<R> &operator*=(Cx<R> &a, R b) { a = a * b; return a; }
template <class R> Cx<R> &operator/=(Cx<R> &a, Cx<R> b) { a = a / b; return a; }
template <class R> Cx<R> &operator/=(Cx<R> &a, R b) { a = a / b; return a; }

template <class R> bool operator==(Cx<R> a, Cx<R> b) { return a.re == b.re && a.im == b.im; }

template <class R> R abs(Cx<R> a) {
  using std::sqrt;
  return sqrt(norm2(a));
}

template <class R> R arg(Cx<R> a) {
  using std::atan2;
  return atan2(a.im, a.re);
}

template <class R> Cx<R> cis(R t) {
  R s, c;
  sincos(t, s, c);
  return {c, s};
}

template <class R> Cx<R> exp(Cx<R> a) {
  using std::exp;
  R m = exp(a.re);
  R s, c;
  sincos(a.im, s, c);
  return {m * c, m * s};
}

// principal branch
template <class R> Cx<R> log(Cx<R> a) {
  using std::log;
  return {R(0.5) * log(norm2(a)), arg(a)};
}

template <class R> Cx<R> pow(Cx<R> a, Cx<R> b) { return exp(b * log(a)); }

// x^s for real x > 0, complex s; avoids the atan2 in the general clog
template <class R> Cx<R> rpow(R x, Cx<R> s) {
  using std::log;
  return exp(s * log(x));
}

template <class R> bool cx_isfinite(Cx<R> a) {
  using std::isfinite;
  return isfinite(a.re) && isfinite(a.im);
}

// integer power, exponent >= 0
template <class R> Cx<R> powi(Cx<R> base, int e) {
  Cx<R> r{R(1.0)};
  while (e > 0) {
    if (e & 1) r *= base;
    base *= base;
    e >>= 1;
  }
  return r;
}

} // namespace lfun
