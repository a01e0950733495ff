#pragma once
#include <utility>

#include "lfun/forms.hpp"
#include "lfun/specfun.hpp"

// Contour setup for the central-point L-value.  The value at s = 1/2 + iT is
// reached through a Mellin-type integral of the lifted form along the ray
// alpha*t, alpha = -1 + i/Tt, truncated to a window [t0, t1] chosen so the
// discarded tails are below T^-gamma relative accuracy.
//
// For holomorphic forms Tt = T and the integrand exponent is
// nu = s + (k-1)/2.  For Maass forms the ray parameter Tt = T1 is picked by
// select_T1 so the Bessel-Mellin factor C(T1) is safely away from 0, and
// nu = s - 1/2.

namespace lfun {

struct TruncationWindow {
  double t0 = 0;  // lower cut
  double t1 = 0;  // upper cut
  double c = 0;   // window constant: t1 = c*T*logT, t0 = 1/t1
};

// Window covering all but O(T^-gamma) of the integral mass.
// Decay model: the integrand is |fhat(1)| t^(Re nu - 1) exp(-a t / T) at the
// top end (a = 2*pi*T/Tt) and governed by the Fricke-reflected series at the
// bottom end.  Both ends are swallowed by a fixpoint constant; c takes the max.
TruncationWindow truncation_window(const Form &f, double T, double Tt,
                                   cxd nu, double gamma);

struct ContourSpec {
  FormKind kind = FormKind::holomorphic;
  double T = 0;            // spectral parameter: s = 1/2 + iT
  double Tt = 0;           // ray parameter (T for holomorphic, T1 for Maass)
  cxd s{};                 // 1/2 + iT
  cxd nu{};                // integrand exponent: integrand ~ f(alpha t) t^(nu-1)
  cxd alpha{};             // -1 + i/Tt
  int weight = 0;          // k (0 for Maass)
  double gamma = 4;        // accuracy target carried into the error note
  LogComplex prefactor{};  // L = exp(prefactor) * integral
  TruncationWindow window{};
};

ContourSpec holo_contour(const Form &f, double T, double gamma);
ContourSpec maass_contour(const Form &f, double T, double gamma);

// Combine the windowed integral with the predetermined prefactor.
// `scale` carries any log-space normalisation pulled out of the quadrature;
// `quad_err` is the integrator's own error estimate (same normalisation as
// `integral`).  Returns (L, error note).  The note adds the window-truncation
// allowance T^-gamma (T^(1-gamma) for Maass) to the propagated quadrature
// error.  Throws numerical_error when the final exponent leaves binary64
// range; the extended-precision mode is the remedy.
std::pair<cxd, double> assemble_L(const ContourSpec &c, cxd integral,
                                  LogComplex scale, double quad_err);

inline std::pair<cxd, double> assemble_L(const ContourSpec &c, cxd integral,
                                         double quad_err = 0.0) {
  return assemble_L(c, integral, LogComplex{}, quad_err);
}

}  // namespace lfun
