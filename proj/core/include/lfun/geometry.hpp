#pragma once
// SL(2,R) plumbing: Iwasawa (N*A*K) coordinates, reduction into the standard
// fundamental domain of the modular group, and the small-displacement jets
// used to share one evaluation among nearby group elements.
//
// Conventions.  n(t) = [[1,t],[0,1]], a(y) = diag(e^{y/2}, e^{-y/2}),
// K(th) = [[cos th, sin th], [-sin th, cos th]].  Every unimodular m
// factors as m = n(t) a(y) K(th) with
//   t  = (ac + bd) / (c^2 + d^2)
//   y  = -log(c^2 + d^2)
//   th = atan2(-c, d)
// and m * i = t + i e^y.

#include <cmath>
#include <cstdint>
#include <cstdlib>

#include "lfun/cx.hpp"
#include "lfun/errors.hpp"
#include "lfun/jet.hpp"

namespace lfun {

template <class R>
struct Mat2 {
  R a{}, b{}, c{}, d{};

  R det() const { return a * d - b * c; }
};

template <class R> Mat2<R> operator*(const Mat2<R> &x, const Mat2<R> &y) {
  return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d,
          x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
}

// inverse assuming det = 1
template <class R> Mat2<R> inv_unimodular(const Mat2<R> &m) {
  return {m.d, -m.b, -m.c, m.a};
}

template <class R> Mat2<R> mat_n(R t) { return {R(1.0), t, R(0.0), R(1.0)}; }

template <class R> Mat2<R> mat_a(R y) {
  using std::exp;
  R e = exp(y * 0.5);
  return {e, R(0.0), R(0.0), R(1.0) / e};
}

template <class R> Mat2<R> mat_k(R th) {
  R s, c;
  sincos(th, s, c);
  return {c, s, -s, c};
}

template <class R>
struct Nak {
  R t{}, y{}, th{};
};

template <class R> Nak<R> nak_of(const Mat2<R> &m) {
  using std::log;
  using std::atan2;
  R den = m.c * m.c + m.d * m.d;
  return {(m.a * m.c + m.b * m.d) / den, -log(den), atan2(-m.c, m.d)};
}

template <class R> Mat2<R> mat_nak(const Nak<R> &q) {
  return mat_n(q.t) * (mat_a(q.y) * mat_k(q.th));
}

// point m * i in the upper half plane: (x, y) with y = Im
template <class R> void point_of(const Mat2<R> &m, R &x, R &y) {
  R den = m.c * m.c + m.d * m.d;
  x = (m.a * m.c + m.b * m.d) / den;
  y = R(1.0) / den;
}

// a(-log T) n(u): base point of the closed horocycle at height 1/T
template <class R> Mat2<R> mat_horocycle(R u, R T) {
  using std::sqrt;
  R s = sqrt(T);
  return {R(1.0) / s, u / s, R(0.0), s};
}

// kappa(t) * i = t * (-1 + i/Tt)
template <class R> Mat2<R> mat_kappa(R t, R Tt) {
  using std::sqrt;
  R s = sqrt(t / Tt);
  return {s, -sqrt(t * Tt), R(0.0), R(1.0) / s};
}

// omega(u) = n(-u) a(log(1 + u/Tt)); kappa(t) omega(u) * i = t(1+u/Tt)(-1+i/Tt)
template <class R> Mat2<R> mat_omega(R u, R Tt) {
  using std::sqrt;
  R s = sqrt(R(1.0) + u / Tt);
  return {s, -u / s, R(0.0), R(1.0) / s};
}

// ---------------------------------------------------------------------------
// Reduction to the fundamental domain |x| <= 1/2, |z| >= 1.
//
// The translation/inversion word is found on the point alone; the word is
// accumulated as an exact integer matrix and multiplied into g once at the
// end (compensated in double so the near-cancelling dot products do not eat
// the answer).  Returns w = gamma * g; left invariance of the lifted form
// makes w interchangeable with g.

namespace gdetail {

inline double dot2(double a, double b, double c, double d) {
  // a*b + c*d with one error-free product each
  double p = a * b, pe = std::fma(a, b, -p);
  double q = c * d, qe = std::fma(c, d, -q);
  double s, e;
  s = ddetail::two_sum(p, q, e);
  return s + (e + pe + qe);
}

inline dd dot2(dd a, dd b, dd c, dd d) { return a * b + c * d; }

} // namespace gdetail

template <class R>
struct Reduced {
  Mat2<R> w;                    // gamma * g
  long long m11, m12, m21, m22; // gamma
  int inversions = 0;
};

template <class R> Reduced<R> reduce(const Mat2<R> &g) {
  double x, y;
  {
    R xr, yr;
    point_of(g, xr, yr);
    x = dbl(xr);
    y = dbl(yr);
  }
  if (!(y > 0.0) || !std::isfinite(x)) throw numerical_error("reduce: point not in upper half plane");

  long long m11 = 1, m12 = 0, m21 = 0, m22 = 1;
  int inversions = 0;
  for (int iter = 0; iter < 512; ++iter) {
    double nshift = std::nearbyint(x);
    if (std::abs(nshift) >= 1.0) {
      long long nn = (long long)nshift;
      x -= nshift;
      // gamma <- n(-nn) gamma
      m11 -= nn * m21;
      m12 -= nn * m22;
    }
    double r2 = x * x + y * y;
    if (r2 >= 1.0 - 1e-15) break;
    // gamma <- S gamma, S = [[0,-1],[1,0]], z <- -1/z
    long long t11 = -m21, t12 = -m22;
    m21 = m11;
    m22 = m12;
    m11 = t11;
    m12 = t12;
    x = -x / r2;
    y = y / r2;
    ++inversions;
    if (iter == 511) throw numerical_error("reduce: no convergence");
  }

  Reduced<R> out;
  out.m11 = m11;
  out.m12 = m12;
  out.m21 = m21;
  out.m22 = m22;
  out.inversions = inversions;
  R a11{double(m11)}, a12{double(m12)}, a21{double(m21)}, a22{double(m22)};
  out.w.a = gdetail::dot2(a11, g.a, a12, g.c);
  out.w.b = gdetail::dot2(a11, g.b, a12, g.d);
  out.w.c = gdetail::dot2(a21, g.a, a22, g.c);
  out.w.d = gdetail::dot2(a21, g.b, a22, g.d);
  return out;
}

// membership in the open Iwasawa box (-delta, delta)^3
template <class R> bool in_neighborhood(const Mat2<R> &m, double delta) {
  Nak<R> q = nak_of(m);
  return std::abs(dbl(q.t)) < delta && std::abs(dbl(q.y)) < delta &&
         std::abs(dbl(q.th)) < delta;
}

// ---------------------------------------------------------------------------
// Displacement jets.  For A close to the identity, the curve
//     B(t) = n(-t) A n(t)
// stays close to the identity for bounded t, and its Iwasawa coordinates
// (tau(t), ups(t), w(t)) are what couples a member's integrand to the
// representative's.  Entries of B:
//     [[ p - t r,  q + t (p - s) - t^2 r ],
//      [ r,        s + t r              ]]

template <class R>
struct DispJets {
  Jet1<R> tau, ups, w;
};

namespace gdetail {

// NAK coordinate jets of a near-identity matrix curve given its entry jets
template <class R>
DispJets<R> nak_jets_of(const Jet1<R> &Ba, const Jet1<R> &Bb, const Jet1<R> &Bc,
                        const Jet1<R> &Bd) {
  using std::atan2;
  DispJets<R> out;
  Jet1<R> den = Bc * Bc + Bd * Bd;
  out.tau = (Ba * Bc + Bb * Bd) / den;
  out.ups = -log(den);
  // w = atan(-Bc/Bd); near-identity curves keep Bd away from 0, so the
  // principal branch is right (constant fixed up by full-quadrant atan)
  out.w = atan_jet(-Bc / Bd);
  out.w[0] = atan2(-Bc[0], Bd[0]);
  return out;
}

}  // namespace gdetail

template <class R> DispJets<R> displacement_jets(const Mat2<R> &A, int order) {
  int n = order;
  Jet1<R> Ba(n), Bb(n), Bc(n), Bd(n);
  Ba[0] = A.a;
  Bb[0] = A.b;
  Bc[0] = A.c;
  Bd[0] = A.d;
  if (n >= 1) {
    Ba[1] = -A.c;
    Bb[1] = A.a - A.d;
    Bd[1] = A.c;
  }
  if (n >= 2) Bb[2] = -A.c;
  return gdetail::nak_jets_of(Ba, Bb, Bc, Bd);
}

// Same for the expanding flow: D(u) = omega(u)^{-1} A omega(u) with
// omega(u) = [[s, -u/s],[0,1/s]], s = sqrt(1+u/Tt).  Exact rational entries:
//   D11 = p + u r                 D12 = (q + u(s22-p) - u^2 r)/(1+u/Tt)
//   D21 = r (1+u/Tt)              D22 = s22 - u r
template <class R>
DispJets<R> displacement_jets_omega(const Mat2<R> &A, double Tt, int order) {
  int n = order;
  R it{1.0 / Tt};
  Jet1<R> Ba(n), Bc(n), Bd(n), num(n), den(n);
  Ba[0] = A.a;
  Bc[0] = A.c;
  Bd[0] = A.d;
  num[0] = A.b;
  den[0] = R(1.0);
  if (n >= 1) {
    Ba[1] = A.c;
    Bc[1] = A.c * it;
    Bd[1] = -A.c;
    num[1] = A.d - A.a;
    den[1] = it;
  }
  if (n >= 2) num[2] = -A.c;
  Jet1<R> Bb = num / den;
  return gdetail::nak_jets_of(Ba, Bb, Bc, Bd);
}

// largest |value| the displacement coordinates reach for t in [0, tmax];
// crude bound from the polynomial entries, used to pick expansion depth
template <class R>
void displacement_reach(const Mat2<R> &A, double tmax, double &dtau, double &dups, double &dw) {
  double p = dbl(A.a), q = dbl(A.b), r = dbl(A.c), s = dbl(A.d);
  double e1 = std::abs(p - 1.0), e2 = std::abs(q), e3 = std::abs(r), e4 = std::abs(s - 1.0);
  double t = tmax;
  // |entries of B - I| over [0, tmax]
  double ba = e1 + t * e3;
  double bb = e2 + t * (e1 + e4) + t * t * e3;
  double bc = e3;
  double bd = e4 + t * e3;
  // first-order sizes of the coordinates; the quadratic remainder is small
  // for the displacement scales the engine admits, fold it in with a margin
  double m = ba + bb + bc + bd;
  dtau = (bb + bc) * (1.0 + m);
  dups = 2.0 * (ba + bd + bc) * (1.0 + m);
  dw = bc * (1.0 + m);
}

} // namespace lfun
