#pragma once

#include "lfun/cx.hpp"
#include "lfun/jet.hpp"
#include "lfun/errors.hpp"

// Special functions needed by the Maass-form contour: complex log-gamma,
// K-Bessel with imaginary order, Gauss hypergeometric, and the closed form of
// the cosine-Bessel Mellin transform used to normalise the Maass L-integral.
// Everything here is double precision; magnitudes that overflow double are
// carried in log space (LogComplex).

namespace lfun {

// Represents exp(logmag + i*arg).  `arg` is kept as accumulated (not folded
// into (-pi,pi]); consumers that need a folded argument reduce mod 2*pi.
struct LogComplex {
  double logmag = 0.0;
  double arg = 0.0;
};

inline LogComplex lc_mul(LogComplex a, LogComplex b) {
  return {a.logmag + b.logmag, a.arg + b.arg};
}
inline LogComplex lc_div(LogComplex a, LogComplex b) {
  return {a.logmag - b.logmag, a.arg - b.arg};
}
inline LogComplex lc_of(cxd z) {
  return {0.5 * std::log(norm2(z)), arg(z)};
}
// base^e in log space, principal log of base
inline LogComplex lc_pow(cxd base, cxd e) {
  double lr = 0.5 * std::log(norm2(base));
  double li = arg(base);
  return {e.re * lr - e.im * li, e.re * li + e.im * lr};
}
inline LogComplex lc_mul_c(LogComplex a, cxd z) { return lc_mul(a, lc_of(z)); }
inline cxd lc_value(LogComplex a) {
  double m = std::exp(a.logmag);
  double s, c;
  sincos(a.arg, s, c);
  return {m * c, m * s};
}
inline double fold_arg(double a) {
  double t = std::remainder(a, 6.283185307179586476925287);
  return t;  // in [-pi, pi]
}

// Principal-branch log Gamma, continuous lift (imaginary part may exceed pi).
// Upward recursion to Re z >= 20 followed by Stirling with Bernoulli terms.
// Relative accuracy ~1e-13 for |z| moderate (the contour code uses
// -30 <= Re z <= 30, |Im z| up to ~1e7).  Throws numerical_error at poles.
LogComplex log_gamma(cxd z);

// K_{ir}(x) for x > 0 and |Im r| < 1/2 (real for real r).  Real-axis integral
// representation evaluated by interval-halving trapezoid sums; relative error
// ~1e-13 over 1e-3 <= x <= 200 away from underflow.
cxd bessel_k(cxd r, double x);

// Taylor jet of x -> K_{ir}(x) at x0 > 0: the two seeds come from the
// integral representation, the rest from the Bessel ODE recurrence.
Jet1<cxd> bessel_k_jet(cxd r, double x0, int order);

// Gauss hypergeometric F(a,b;c;z).  Supported regions: |z| <= 0.75 (series),
// the Pfaff image |z/(z-1)| <= 0.75, and real z <= -1 (1/(1-z) connection
// formula).  The connection formula degenerates when b-a is an integer; that
// case is reported as numerical_error, not resolved.
cxd hyp2f1(cxd a, cxd b, cxd c, cxd z);

// integral_0^inf cos(T1 t) K_{ir}(t) t^{iT - 1/2} dt in log space, via the
// Gamma x hypergeometric closed form, split through the 1/(1+T1^2)
// connection so both hypergeometric factors are near 1 for T1 >~ T.
LogComplex mellin_cos_bessel(double T, double T1, cxd r);

struct T1Choice {
  double T1;
  LogComplex C;  // value of the Mellin integral at T1
};

// Scan T1 = c*T over 64 log-spaced c in [B, 20B] (B from the first-term
// validity bound of the transformed hypergeometric series) and return the
// candidate maximising |C(T1)|.  Throws selection_failure when even the best
// candidate has |C(T1)|*T < 0.05.
T1Choice select_T1(double T, cxd r);

namespace sfdetail {
// exposed for the overlap cross-check between evaluation paths
cxd hyp2f1_series(cxd a, cxd b, cxd c, cxd z);
cxd hyp2f1_neg(cxd a, cxd b, cxd c, cxd z);    // via 1/(1-z), needs b-a non-integer
cxd hyp2f1_pfaff(cxd a, cxd b, cxd c, cxd z);  // via z/(z-1)
}  // namespace sfdetail

}  // namespace lfun
