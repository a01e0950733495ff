#pragma once

// Taylor-grid integrator: the integrand arrives as a jet provider, each grid
// cell is integrated termwise from one order-N jet at its center, and the
// grid spacing comes from the declared derivative scale.  Summation order is
// fixed (ascending cell index, compensated), so results are reproducible and
// independent of any caller-side threading.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "lfun/cx.hpp"
#include "lfun/dd.hpp"
#include "lfun/errors.hpp"
#include "lfun/jet.hpp"

namespace lfun {

// Declared integrand growth: |coef_m(u)| <= A * deriv_scale^m * (1 + u^poly_degree)
// for some moderate A; honesty is spot-checked by the tail estimates below.
struct ProviderTraits {
  double deriv_scale = 1.0;  // R
  int poly_degree = 0;       // l
};

struct QuadratureSpec {
  double length = 0.0;  // interval [0, length]
  double gamma = 4.0;   // error target exponent: total error budget T_ctx^-gamma
  double eps = 1.0 / 16;
  double t_ctx = 2.0;   // ambient scale for budgets
  int order_shift = 0;  // test hook: adjust the chosen jet order
  double h_override = 0.0;  // test hook: force the grid spacing
  // Per-cell budget floor.  Orders past the working precision only add
  // rounding noise, so the planner refuses to chase tighter targets than
  // this.  Extended-precision callers lower it.
  double acc_floor = 1e-17;
};

template <class S>
struct QuadResult {
  S value{};
  double err_est = 0.0;
  long long jet_evals = 0;
  long long cells = 0;
};

namespace qdetail {

inline void neum_add(double &s, double &comp, double x) {
  double t = s + x;
  if (std::abs(s) >= std::abs(x))
    comp += (s - t) + x;
  else
    comp += (x - t) + s;
  s = t;
}

template <class S> struct Acc;

template <> struct Acc<Cx<double>> {
  double sre = 0, cre = 0, sim = 0, cim = 0;
  void add(Cx<double> v) {
    neum_add(sre, cre, v.re);
    neum_add(sim, cim, v.im);
  }
  Cx<double> get() const { return {sre + cre, sim + cim}; }
};

template <> struct Acc<Cx<dd>> {
  Cx<dd> s{};
  void add(Cx<dd> v) { s += v; }
  Cx<dd> get() const { return s; }
};

// |z| without squaring: jet magnitudes near the window edges can sit past
// sqrt(DBL_MAX), where norm2 would overflow to inf
template <class S> double absv(S z) { return std::hypot(dbl(z.re), dbl(z.im)); }

// integral over [0, h] using coefficients 0..top only
template <class S, class X>
S integrate0h_trunc(const Jet1<S> &a, X h, int top) {
  S acc = a[top] * (1.0 / double(top + 1));
  for (int m = top - 1; m >= 0; --m) acc = acc * h + a[m] * (1.0 / double(m + 1));
  return acc * h;
}

template <class S, class F>
void cell(F &jets, double a, double b, int order, double rscale,
          double tol_density, int depth, Acc<S> &acc, double &err,
          long long &evals, long long &cells) {
  using X = decltype(std::declval<S>().re);
  double u0 = 0.5 * (a + b);
  double hw = 0.5 * (b - a);
  Jet1<S> jet = jets(u0, order);
  ++evals;

  X hwp = X(hw), hwm = X(-hw);
  S hi = integrate0h_trunc(jet, hwp, order) - integrate0h_trunc(jet, hwm, order);
  S lo = integrate0h_trunc(jet, hwp, order - 2) - integrate0h_trunc(jet, hwm, order - 2);
  double diff = absv(S(hi - lo));

  // tail from the observed top coefficients against the declared scale;
  // rscale^order can leave double range, so the ratio is formed in logs
  double rho = std::min(0.95, rscale * hw);
  double lr = std::log(rscale);
  double a1 = absv(jet[order]), a0 = absv(jet[order - 1]);
  double lamp = std::max(a1 > 0 ? std::log(a1) - double(order) * lr : -1e308,
                         a0 > 0 ? std::log(a0) - double(order - 1) * lr : -1e308);
  double tail = 2.0 * hw * std::exp(std::min(lamp, 690.0)) *
                std::pow(rho, order + 1) / (1.0 - rho);

  double tol = std::max(tol_density * (b - a), absv(hi) * 5e-16);
  if ((diff > tol || tail > tol) && depth < 6 && (b - a) > 1e-7) {
    cell(jets, a, u0, order, rscale, tol_density, depth + 1, acc, err, evals, cells);
    cell(jets, u0, b, order, rscale, tol_density, depth + 1, acc, err, evals, cells);
    return;
  }
  acc.add(hi);
  err += diff + tail;
  ++cells;
}

}  // namespace qdetail

// Grid layout shared by the integrator and the batched table builders.
struct GridPlan {
  double h = 0;
  int order = 4;
  double rho = 0.5;
  double tol_density = 0;
};

inline GridPlan plan_grid(ProviderTraits traits, const QuadratureSpec &spec) {
  if (!(spec.gamma > 0.0) || !(spec.eps > 0.0))
    throw input_error("quadrature: gamma and eps must be positive");
  GridPlan p;
  double rscale = std::max(traits.deriv_scale, 1e-2);
  double tctx = std::max(spec.t_ctx, 2.0);
  p.h = std::min(1.0, std::pow(tctx, -spec.eps) / rscale);
  if (spec.h_override > 0.0) p.h = spec.h_override;
  if (spec.length > 0.0) p.h = std::min(p.h, spec.length);

  p.tol_density = std::pow(tctx, -spec.gamma) / std::max(spec.length, 1.0);

  // order from the per-cell budget against the coefficient decay rho
  p.rho = std::min(0.95, rscale * 0.5 * p.h);
  double floor = std::clamp(spec.acc_floor, 1e-300, 1e-2);
  double want = std::log(std::max(p.tol_density * p.h, floor)) / std::log(p.rho);
  p.order = std::clamp(static_cast<int>(std::ceil(want)) + spec.order_shift, 4, 74);
  return p;
}

template <class F>
auto taylor_grid_integrate(F &&jets, ProviderTraits traits, QuadratureSpec spec)
    -> QuadResult<typename std::decay_t<decltype(jets(0.0, 0))>::scalar> {
  using S = typename std::decay_t<decltype(jets(0.0, 0))>::scalar;
  QuadResult<S> out;
  if (!(spec.length >= 0.0)) throw input_error("quadrature: negative interval");
  if (spec.length == 0.0) return out;

  GridPlan plan = plan_grid(traits, spec);
  double rscale = std::max(traits.deriv_scale, 1e-2);
  double h = plan.h;
  double tol_density = plan.tol_density;
  int order = plan.order;

  long long m = static_cast<long long>(std::ceil(spec.length / h - 1e-12));
  if (m < 1) m = 1;

  qdetail::Acc<S> acc;
  double err = 0.0;
  for (long long i = 0; i < m; ++i) {
    double a = i * h;
    double b = (i + 1 < m) ? (i + 1) * h : spec.length;  // final partial cell
    if (!(b > a)) continue;
    qdetail::cell(jets, a, b, order, rscale, tol_density, 0, acc, err,
                  out.jet_evals, out.cells);
  }
  out.value = acc.get();
  out.err_est = err;
  return out;
}

}  // namespace lfun
