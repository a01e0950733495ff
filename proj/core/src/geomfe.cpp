#include "lfun/geomfe.hpp"

#include <algorithm>
#include <cmath>

#include "lfun/errors.hpp"

namespace lfun {

namespace {

// smallest c >= 1 with a*base*c*lt/2 >= off*lt + p*log(c*T*lt), found by
// fixpoint iteration (the log term moves slowly)
double window_fixpoint(double a_base, double p, double off, double T, double lt) {
  double c = 1.0;
  for (int it = 0; it < 8; ++it) {
    double need = off * lt + p * std::log(std::max(c * T * lt, 2.0));
    c = std::max(1.0, 2.0 * need / (a_base * lt));
  }
  return c;
}

}  // namespace

TruncationWindow truncation_window(const Form &f, double T, double Tt, cxd nu,
                                   double gamma) {
  if (!(T > 0) || !(Tt > 0)) throw input_error("truncation_window: T, Tt must be positive");
  double lt = std::max(std::log(T), 1.0);
  double a = kTwoPi * T / Tt;  // top-end decay exp(-a*t/T)

  // top end: t^(Re nu - 1) against exp(-a t / (2T)), the spare half of the
  // exponent buys the T^-gamma margin through the (1+gamma) factor below
  double p_up = std::max(nu.re - 1.0, 0.0);
  double cp = 1.0;
  for (int it = 0; it < 8; ++it) {
    double lg = std::log(std::max(cp, 1.0)) + std::log(lt);
    cp = std::max(1.0, (2.0 * p_up / a) * (1.0 + lg / lt));
  }
  double c_up = 2.0 * (cp + 1.0) * (1.0 + 1.0 / a) * (1.0 + gamma);

  // bottom end: the reflected series decays like exp(-a t1 / (C1 T)) at
  // t = 1/t1; the polynomial part of the reflection is at worst t^-(k+1)
  double c1 = f.fricke_c1 > 0 ? f.fricke_c1 : 1.0;
  double p_lo = std::max(f.weight + 1.0 - nu.re, 1.0);
  double c_lo = window_fixpoint(a / c1, p_lo, gamma, T, lt);

  TruncationWindow w;
  w.c = std::max({c_up, c_lo, 1.0});
  w.t1 = w.c * T * lt;
  w.t0 = 1.0 / w.t1;
  return w;
}

ContourSpec holo_contour(const Form &f, double T, double gamma) {
  if (f.kind != FormKind::holomorphic)
    throw input_error("holo_contour: form is not holomorphic");
  if (!(T > 0)) throw input_error("holo_contour: T must be positive");
  ContourSpec c;
  c.kind = f.kind;
  c.T = T;
  c.Tt = T;
  c.weight = f.weight;
  c.s = cxd{0.5, T};
  c.nu = c.s + cxd{(f.weight - 1) * 0.5, 0.0};
  c.alpha = cxd{-1.0, 1.0 / T};
  // L = (2 pi)^nu (-alpha i)^nu / Gamma(nu) * integral; -alpha*i = 1/T + i
  // stays in the right half plane, so the principal power is the right one
  cxd mai{1.0 / T, 1.0};
  LogComplex num = lc_mul(lc_pow(cxd{kTwoPi, 0.0}, c.nu), lc_pow(mai, c.nu));
  c.prefactor = lc_div(num, log_gamma(c.nu));
  c.window = truncation_window(f, T, c.Tt, c.nu, gamma);
  c.gamma = gamma;
  return c;
}

ContourSpec maass_contour(const Form &f, double T, double gamma) {
  if (f.kind != FormKind::maass) throw input_error("maass_contour: form is not Maass");
  if (!(T > 0)) throw input_error("maass_contour: T must be positive");
  ContourSpec c;
  c.kind = f.kind;
  c.T = T;
  c.weight = 0;
  c.s = cxd{0.5, T};
  c.nu = cxd{0.0, T};  // s - 1/2
  T1Choice ch = select_T1(T, cxd{f.r, 0.0});
  c.Tt = ch.T1;
  c.alpha = cxd{-1.0, 1.0 / ch.T1};
  // L = (2 pi)^s / (2 T1^(s-1/2) C(T1)) * integral
  LogComplex den = lc_mul(lc_of(cxd{2.0, 0.0}),
                          lc_mul(lc_pow(cxd{ch.T1, 0.0}, c.nu), ch.C));
  c.prefactor = lc_div(lc_pow(cxd{kTwoPi, 0.0}, c.s), den);
  c.window = truncation_window(f, T, c.Tt, c.nu, gamma);
  c.gamma = gamma;
  return c;
}

std::pair<cxd, double> assemble_L(const ContourSpec &c, cxd integral,
                                  LogComplex scale, double quad_err) {
  LogComplex pre = lc_mul(c.prefactor, scale);
  double trunc = std::pow(c.T, -c.gamma) * (c.kind == FormKind::maass ? c.T : 1.0);
  double emag = pre.logmag;
  if (!std::isfinite(emag)) throw numerical_error("assemble_L: prefactor not finite");
  double n2 = dbl(norm2(integral));
  if (n2 == 0.0) return {cxd{0.0, 0.0}, trunc + std::exp(std::min(emag, 700.0)) * quad_err};
  double total = emag + 0.5 * std::log(n2);
  if (total > 700.0)
    throw numerical_error(
        "assemble_L: result magnitude exceeds binary64 range; extended "
        "precision mode required");
  cxd L = lc_value(lc_mul(pre, lc_of(integral)));
  double err = trunc + std::exp(std::min(emag, 700.0)) * quad_err;
  return {L, err};
}

}  // namespace lfun
