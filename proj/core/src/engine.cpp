#include "lfun/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "lfun/dd.hpp"
#include "lfun/errors.hpp"
#include "lfun/specfun.hpp"

namespace lfun {

void check_exponents(double eta, double eps) {
  if (!(eta > 0.0) || !(eta < 1.0 / 3))
    throw input_error("eta must lie in (0, 1/3)");
  if (!(eps > 0.0) || !(eps < 1.0 - 3.0 * eta))
    throw input_error("epsilon must lie in (0, 1 - 3 eta)");
}

// ---------------------------------------------------------------- planning

Mat2<double> FourierPlan::base(long long j) const {
  // midpoint of segment j: tables integrate the symmetric window [-m/2, m/2],
  // which halves the reach of the linear displacement layer and quarters the
  // quadratic one compared to anchoring at the left edge
  return mat_horocycle(double(j) * double(m) + 0.5 * double(m), T);
}

FourierPlan plan_fourier_segments(double T, double eta) {
  if (!(T >= 1.0) || std::floor(T) != T)
    throw input_error("fourier: T must be a positive integer");
  if (!(eta > 0.0) || !(eta < 1.0)) throw input_error("fourier: eta out of range");
  FourierPlan p;
  p.T = T;
  p.m = std::max<long long>(
      1, static_cast<long long>(std::floor(std::pow(T, eta) + 1e-9)));
  p.count = static_cast<long long>(T) / p.m;
  p.rem0 = double(p.count * p.m);
  p.x0 = mat_horocycle(0.0, T);
  return p;
}

LvaluePlan plan_lvalue_segments(const ContourSpec &c, double eta) {
  if (!(eta > 0.0) || !(eta < 1.0)) throw input_error("lvalue: eta out of range");
  double Tt = c.Tt;
  LvaluePlan p;
  p.m = std::pow(Tt, eta);
  double ratio = 1.0 + p.m / Tt;
  double t0 = c.window.t0, t1 = c.window.t1;
  if (!(t0 > 0.0) || !(t1 > t0)) throw input_error("lvalue: bad window");
  double lmag = (0.5 * c.weight - 1.0) * std::log(Tt);
  long long idx = 0;
  // ladder b_j = t0 * ratio^j; phase of b^(i T) needs the product T*log(b)
  // carried beyond double before folding
  for (double b = t0; b < t1 && idx < (1ll << 31);) {
    LSegment s;
    s.index = idx++;
    s.b = b;
    double bnext = b * ratio;
    if (bnext >= t1) {
      s.m_len = Tt * (t1 / b - 1.0);
      if (!(s.m_len > 0)) break;
    } else {
      s.m_len = p.m;
    }
    dd ph = dd{c.T} * log(dd{b});
    double nwind = std::nearbyint(dbl(ph) / dbl(dd_2pi));
    ph = ph - dd_2pi * dd{nwind};
    s.a_y = LogComplex{lmag, dbl(ph)};
    p.segs.push_back(s);
    b = bnext;
  }
  return p;
}

// ---------------------------------------------------------------- grouping

namespace {

constexpr int kMaxOrder = 32;

// Convergence model of the displacement expansion.  For A = v^-1 w near the
// identity, B(t) = n(-t) A n(t) has b-entry A.b + t(A.a - A.d) - t^2 A.c, and
// a power of the degree-j layer spends j expansion orders, so the tail after
// order d behaves like max_j x_j^((d+1)/j) with x_j the layer size over its
// convergence radius.  Radii below were fitted against direct segment
// integrals on fundamental-domain frames (worst frame, ~25% margin); the
// rotation layer e^{i k omega} is summed in closed form by the collapse and
// the y-layer rides along with the tau layers inside these fits.  Radii
// shrink for forms with derivative growth beyond the calibration scale.
struct AdmitModel {
  double rho0 = 0.65, rho1 = 0.45, rho2 = 0.42;
  double sigma = 0.5;  // largest |t| in the table window
  double bits = 46.0;  // target tail, 2^-bits relative to the table
};

AdmitModel admit_model(double sigma, double bits, double rscale) {
  AdmitModel m;
  double s = std::max(1.0, rscale / 16.0);
  m.rho0 = 0.68 / s;
  m.rho1 = 0.47 / s;
  m.rho2 = 0.44 / s;
  m.sigma = std::max(sigma, 0.0);
  m.bits = bits;
  return m;
}

// per-order tail ratio of one member's expansion; < 1 means geometric decay
double member_ratio(const Mat2<double> &A, const AdmitModel &m) {
  double e1 = std::abs(A.a - 1.0), e2 = std::abs(A.b);
  double e3 = std::abs(A.c), e4 = std::abs(A.d - 1.0);
  double infl = 1.0 + (e1 + e2 + e3 + e4);  // conjugation cross terms
  double q0 = infl * e2 / m.rho0;
  double q1 = infl * (e1 + e4) * m.sigma / m.rho1;
  double q2 = std::sqrt(infl * e3 * m.sigma * m.sigma / m.rho2);
  return std::max({q0, q1, q2});
}

// y-heavy members converge at the modeled ratio but from a constant up to
// ~2^8; order selection and the admission boundary both budget for it
constexpr double kPrefBits = 8.0;

// smallest order with 2^kPrefBits q^(d+1)/(1-q) <= 2^-bits, or -1 past the cap
int adapt_d(double q, double bits) {
  if (!(q > 0.0)) return 0;
  if (q >= 1.0) return -1;
  double d = (bits + kPrefBits + std::log2(1.0 / (1.0 - q))) /
                 std::log2(1.0 / q) -
             1.0;
  if (!(d <= double(kMaxOrder))) return -1;
  return std::max(0, static_cast<int>(std::ceil(d - 1e-9)));
}

// the ratio at which adapt_d hits the order cap: admission boundary
double admit_ratio(double bits) {
  double lo = 0.01, hi = 0.99;
  for (int i = 0; i < 48; ++i) {
    double mid = 0.5 * (lo + hi);
    double need = double(kMaxOrder + 1) * std::log2(mid) - std::log2(1.0 - mid);
    (need <= -(bits + kPrefBits) ? lo : hi) = mid;
  }
  return lo;
}

struct Caps {
  double dt, dy, dth;
};

// bucket boxes for the grouper: the coordinate envelope the ratio test can
// accept, capped by delta.  These only prefilter candidate pairs; admission
// itself is in_neighborhood plus the member_ratio test.
Caps admission_caps(double delta, const AdmitModel &m) {
  double qa = admit_ratio(m.bits);
  double s = std::max(m.sigma, 1e-3);
  Caps c;
  c.dt = std::min(delta, m.rho0 * qa);
  c.dy = std::min(delta, m.rho1 * qa / s);
  c.dth = std::min(delta, m.rho2 * qa * qa / (s * s));
  return c;
}

// fold theta into (-pi/2, pi/2]; negating the matrix fixes the lift for the
// even weights this library admits
void psl_fold(Mat2<double> &w, Nak<double> &q) {
  if (q.th > 0.5 * kPi) {
    q.th -= kPi;
  } else if (q.th <= -0.5 * kPi) {
    q.th += kPi;
  } else {
    return;
  }
  w.a = -w.a;
  w.b = -w.b;
  w.c = -w.c;
  w.d = -w.d;
}

struct Grouper {
  Caps caps{};
  AdmitModel model{};
  double delta = 0;
  bool singleton = false;
  std::vector<SegmentGroup> groups;
  std::unordered_map<uint64_t, std::vector<int>> buckets;

  static uint64_t mix(uint64_t h, long long v) {
    h ^= static_cast<uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
  }
  uint64_t key(long long it, long long iy, long long ith) const {
    return mix(mix(mix(0x51ab3ull, it), iy), ith);
  }

  int insert(const Mat2<double> &w, const Nak<double> &q, int seg) {
    if (!singleton) {
      long long it = static_cast<long long>(std::floor(q.t / caps.dt));
      long long iy = static_cast<long long>(std::floor(q.y / caps.dy));
      long long ith = static_cast<long long>(std::floor(q.th / caps.dth));
      for (long long a = -1; a <= 1; ++a)
        for (long long b = -1; b <= 1; ++b)
          for (long long c = -1; c <= 1; ++c) {
            auto hit = buckets.find(key(it + a, iy + b, ith + c));
            if (hit == buckets.end()) continue;
            for (int gi : hit->second) {
              SegmentGroup &g = groups[gi];
              if (std::abs(q.t - g.q.t) >= caps.dt ||
                  std::abs(q.y - g.q.y) >= caps.dy ||
                  std::abs(q.th - g.q.th) >= caps.dth)
                continue;
              Mat2<double> A = inv_unimodular(g.v) * w;
              if (in_neighborhood(A, delta) &&
                  adapt_d(member_ratio(A, model), model.bits) >= 0) {
                g.members.push_back(seg);
                return gi;
              }
            }
          }
      int gi = static_cast<int>(groups.size());
      groups.push_back(SegmentGroup{w, q, {seg}});
      buckets[key(it, iy, ith)].push_back(gi);
      return gi;
    }
    int gi = static_cast<int>(groups.size());
    groups.push_back(SegmentGroup{w, q, {seg}});
    return gi;
  }
};

int resolve_threads(const PipelineParams &pp) {
  if (pp.threads > 0) return pp.threads;
  if (const char *env = std::getenv("LFUN_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

template <class Fn>
void parallel_for(long long n, int threads, Fn &&fn) {
  threads = static_cast<int>(std::min<long long>(threads, n));
  if (threads <= 1) {
    for (long long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long long> next{0};
  std::exception_ptr first_err;
  std::mutex err_mu;
  auto work = [&] {
    for (;;) {
      long long i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!first_err) first_err = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads) - 1);
  for (int i = 1; i < threads; ++i) pool.emplace_back(work);
  work();
  for (auto &t : pool) t.join();
  if (first_err) std::rethrow_exception(first_err);
}

double order_bits(double T, double gamma) {
  return std::min(gamma * std::log2(std::max(T, 2.0)) + 6.0, 46.0);
}

double resolve_scale(const Form &f, const PipelineParams &pp) {
  return pp.deriv_scale > 0 ? pp.deriv_scale : estimate_R(f);
}

double jet_acc(double tol_density, double h, bool extended = false) {
  return std::clamp(tol_density * h * 1e-2, extended ? 1e-30 : 1e-17, 1e-9);
}

const double kFact[33] = {1.,
                          1.,
                          2.,
                          6.,
                          24.,
                          120.,
                          720.,
                          5040.,
                          40320.,
                          362880.,
                          3628800.,
                          39916800.,
                          479001600.,
                          6227020800.,
                          87178291200.,
                          1307674368000.,
                          20922789888000.,
                          355687428096000.,
                          6402373705728000.,
                          1.21645100408832e17,
                          2.43290200817664e18,
                          5.109094217170944e19,
                          1.1240007277776077e21,
                          2.585201673888498e22,
                          6.204484017332394e23,
                          1.5511210043330986e25,
                          4.0329146112660565e26,
                          1.0888869450418352e28,
                          3.0488834461171384e29,
                          8.841761993739701e30,
                          2.6525285981219103e32,
                          8.222838654177922e33,
                          2.631308369336935e35};

inline size_t pair_rank(int d, int b1, int b2) {
  return static_cast<size_t>(b1) * (2 * d + 3 - b1) / 2 + b2;
}

template <class R> Mat2<R> promote(const Mat2<double> &m) {
  return Mat2<R>{R(m.a), R(m.b), R(m.c), R(m.d)};
}

// internal batched table in the working precision
template <class R> struct TableCore {
  int d = 0;
  int weight = 0;
  std::vector<Cx<R>> t;
  double err_est = 0.0;
  long long jet_evals = 0;
  Cx<R> at(int b1, int b2, int l) const {
    return t[pair_rank(d, b1, b2) * (d + 1) + l];
  }
};

// ------------------------------------------------------------ batched tables

// Moment block for one grid cell: W[l][m] = integral over the cell of
// (c + h)^l h^m wgt(h) dh, where wgt is given by its jet at the center.
// Built from V_m = sum_q wgt_q int h^(m+q) dh via the exact lift
// W[l+1][m] = c W[l][m] + W[l][m+1].
template <class S>
std::vector<std::vector<S>> moment_block(const Jet1<S> &wgt, double c, double hw,
                                         int d, int n) {
  int mtop = n + d;
  int nw = wgt.order();
  std::vector<double> ip(static_cast<size_t>(mtop + nw) + 2, 0.0);
  double hp = hw;
  for (int p = 0; p <= mtop + nw; ++p) {
    if (p % 2 == 0) ip[p] = 2.0 * hp / double(p + 1);
    hp *= hw;
  }
  std::vector<std::vector<S>> w(static_cast<size_t>(d) + 1,
                                std::vector<S>(static_cast<size_t>(mtop) + 1, S{}));
  for (int m = 0; m <= mtop; ++m) {
    S v{};
    for (int q = 0; q <= nw; ++q)
      if ((m + q) % 2 == 0) v += wgt[q] * ip[m + q];
    w[0][m] = v;
  }
  for (int l = 0; l < d; ++l)
    for (int m = 0; m + l + 1 <= mtop; ++m) w[l + 1][m] = w[l][m] * c + w[l][m + 1];
  return w;
}

template <class R>
void table_tail(TableCore<R> &tbl, const Jet1<Cx<R>> &s00, double rscale,
                double hw, int n) {
  double rho = std::min(0.95, rscale * hw);
  double lr = std::log(rscale);
  double a1 = std::hypot(dbl(s00[n].re), dbl(s00[n].im));
  double a0 = std::hypot(dbl(s00[n - 1].re), dbl(s00[n - 1].im));
  double lamp = std::max(a1 > 0 ? std::log(a1) - double(n) * lr : -1e308,
                         a0 > 0 ? std::log(a0) - double(n - 1) * lr : -1e308);
  tbl.err_est += 2.0 * hw * std::exp(std::min(lamp, 690.0)) *
                 std::pow(rho, n + 1) / (1.0 - rho);
}

template <class R>
TableCore<R> batch_I_core(const Form &f, const Mat2<double> &v, int d,
                          double m_len, double T_ctx, const PipelineParams &pp,
                          double rscale) {
  if (d < 0 || d > 32) throw input_error("expansion order must be in 0..32");
  TableCore<R> tbl;
  tbl.d = d;
  tbl.weight = f.weight;
  size_t npairs = static_cast<size_t>(d + 1) * (d + 2) / 2;
  tbl.t.assign(npairs * (d + 1), Cx<R>{});
  if (!(m_len > 0)) return tbl;

  ProviderTraits traits{rscale + kTwoPi, 0};
  QuadratureSpec qs;
  qs.length = m_len;
  qs.gamma = pp.gamma;
  qs.eps = pp.eps;
  qs.acc_floor = pp.extended ? 1e-30 : 1e-17;
  qs.t_ctx = T_ctx;
  GridPlan plan = plan_grid(traits, qs);
  double h = plan.h * 0.8;  // fixed grid, no adaptive splits: keep margin
  int n = plan.order;
  double acc = jet_acc(plan.tol_density, h, pp.extended);
  long long ncell = std::max<long long>(
      1, static_cast<long long>(std::ceil(m_len / h - 1e-12)));

  // v sits at the window midpoint; cells cover [-m_len/2, m_len/2]
  double t_lo = -0.5 * m_len;
  std::vector<Jet1<Cx<R>>> sb(npairs);
  for (long long i = 0; i < ncell; ++i) {
    double a = t_lo + double(i) * h;
    double b = (i + 1 < ncell) ? t_lo + double(i + 1) * h : t_lo + m_len;
    if (!(b > a)) continue;
    double c = 0.5 * (a + b), hw = 0.5 * (b - a);

    Reduced<double> red = reduce(v * mat_n(c));
    RectJet2<Cx<R>> rect = lift_rect_jet(f, promote<R>(red.w), d + n, d, acc);
    ++tbl.jet_evals;

    for (int b1 = 0; b1 <= d; ++b1)
      for (int b2 = 0; b2 + b1 <= d; ++b2)
        sb[pair_rank(d, b1, b2)] = rect.shifted_tjet(b1, b2, n);

    // weight e(-t) = e(-c) e(-h) as a jet at the center
    Jet1<Cx<R>> ew(n);
    {
      cxd e0 = cis(-kTwoPi * c);
      Cx<R> cur{R(e0.re), R(e0.im)};
      Cx<R> step{R(0.0), R(-kTwoPi)};
      for (int q = 0; q <= n; ++q) {
        ew[q] = cur;
        cur = cur * step * (1.0 / double(q + 1));
      }
    }
    auto w = moment_block(ew, c, hw, d, n);

    for (int b1 = 0; b1 <= d; ++b1)
      for (int b2 = 0; b2 + b1 <= d; ++b2) {
        const Jet1<Cx<R>> &s = sb[pair_rank(d, b1, b2)];
        size_t base = pair_rank(d, b1, b2) * (d + 1);
        for (int l = 0; l <= d; ++l) {
          Cx<R> accv{};
          const auto &wl = w[l];
          for (int m = 0; m <= n; ++m) accv += s[m] * wl[m];
          tbl.t[base + l] += accv;
        }
      }
    table_tail(tbl, sb[0], traits.deriv_scale, hw, n);
  }
  return tbl;
}

// L-side table: flow omega(u), weight (1 + u/Tt)^(nu - k/2 - 1), u in [0, m_len].
// Derivative jets along the flow come from one rectangular jet at the reduced
// center through the exact decomposition
//   omega(uc)^-1 omega(uc+h) = n(ct h) a(yh(h)),
//   ct = -1/(1+uc/Tt),  yh(h) = log(1 + h/(Tt+uc)),
// so (D^(b1,b2) F)(v omega(uc+h)) = e^(b1 yh) (D^(b1,b2) Phi)(ct h, yh(h)).
template <class R>
TableCore<R> batch_L_core(const Form &f, const ContourSpec &cs,
                          const Mat2<double> &v, int d, double m_len,
                          const PipelineParams &pp, double rscale) {
  if (d < 0 || d > 32) throw input_error("expansion order must be in 0..32");
  TableCore<R> tbl;
  tbl.d = d;
  tbl.weight = f.weight;
  size_t npairs = static_cast<size_t>(d + 1) * (d + 2) / 2;
  tbl.t.assign(npairs * (d + 1), Cx<R>{});
  if (!(m_len > 0)) return tbl;

  double Tt = cs.Tt;
  cxd wexp = cs.nu - cxd{0.5 * cs.weight + 1.0, 0.0};  // weight exponent
  ProviderTraits traits{rscale + std::abs(wexp.im) / Tt + 2.0, 0};
  QuadratureSpec qs;
  qs.length = m_len;
  qs.gamma = pp.gamma;
  qs.eps = pp.eps;
  qs.acc_floor = pp.extended ? 1e-30 : 1e-17;
  qs.t_ctx = std::max(cs.T, 2.0);
  GridPlan plan = plan_grid(traits, qs);
  double h = plan.h * 0.8;
  int n = plan.order;
  double acc = jet_acc(plan.tol_density, h, pp.extended);
  long long ncell = std::max<long long>(
      1, static_cast<long long>(std::ceil(m_len / h - 1e-12)));

  int ny = std::min(d + n, d + 10);  // y-range: yh ~ h/Tt, high powers vanish
  std::vector<Jet1<Cx<R>>> ypow, ebs;
  Jet1<Cx<R>> srow(n), term(n), stmp;

  for (long long i = 0; i < ncell; ++i) {
    double a = double(i) * h;
    double b = (i + 1 < ncell) ? double(i + 1) * h : m_len;
    if (!(b > a)) continue;
    double uc = 0.5 * (a + b), hw = 0.5 * (b - a);

    Reduced<double> red = reduce(v * mat_omega(uc, Tt));
    RectJet2<Cx<R>> rect = lift_rect_jet(f, promote<R>(red.w), d + n, ny, acc);
    ++tbl.jet_evals;

    double ct = -1.0 / (1.0 + uc / Tt);
    // yh(h) jet and its powers
    Jet1<Cx<R>> yh(n);
    {
      double base = Tt + uc;
      double pw = 1.0;
      for (int m = 1; m <= n; ++m) {
        pw /= base;
        yh[m] = Cx<R>{R(((m % 2) ? 1.0 : -1.0) * pw / double(m)), R(0.0)};
      }
    }
    ypow.assign(static_cast<size_t>(ny) + 1, Jet1<Cx<R>>(n));
    ypow[0][0] = Cx<R>{R(1.0), R(0.0)};
    for (int qy = 1; qy <= ny; ++qy) mul_into(ypow[qy], ypow[qy - 1], yh);
    Jet1<Cx<R>> e1 = exp(yh);
    ebs.assign(static_cast<size_t>(d) + 1, Jet1<Cx<R>>(n));
    ebs[0][0] = Cx<R>{R(1.0), R(0.0)};
    for (int b1 = 1; b1 <= d; ++b1) mul_into(ebs[b1], ebs[b1 - 1], e1);

    // weight jet (1 + (uc+h)/Tt)^wexp
    Jet1<R> wbase(n);
    wbase[0] = R(1.0 + uc / Tt);
    if (n >= 1) wbase[1] = R(1.0 / Tt);
    Jet1<Cx<R>> wgt = pow_jet_c(wbase, Cx<R>{R(wexp.re), R(wexp.im)});

    auto w = moment_block(wgt, uc, hw, d, n);

    double acc_break = acc * 1e-2;
    for (int b1 = 0; b1 <= d; ++b1) {
      // srow_j(h) = sum_{i>=b1} Phi_ij C(i,b1) ct^(i-b1) h^(i-b1), assembled
      // per j against ypow with a magnitude break (yh powers die fast)
      for (int b2 = 0; b2 + b1 <= d; ++b2) {
        Jet1<Cx<R>> s(n);
        double binq = 1.0;
        int faded = 0;
        for (int qy = 0; b2 + qy <= ny; ++qy) {
          if (qy > 0) binq *= double(b2 + qy) / double(qy);
          int j = b2 + qy;
          // srow for this (b1, j)
          for (int m = 0; m <= n; ++m) srow[m] = Cx<R>{};
          double cb = 1.0, cpw = 1.0;
          for (int m = 0; b1 + m <= d + n && m <= n; ++m) {
            if (m > 0) {
              cb *= double(b1 + m) / double(m);
              cpw *= ct;
            }
            srow[m] = rect.at(b1 + m, j) * (cb * cpw);
          }
          mul_into(term, srow, ypow[qy]);
          double tn = 0.0;
          for (int m = 0; m <= n; ++m) {
            Cx<R> tv = term[m] * binq;
            s[m] += tv;
            tn = std::max(tn, dbl(norm2(tv)));
          }
          if (qy >= 2) {
            if (std::sqrt(tn) < acc_break) {
              if (++faded >= 2) break;
            } else {
              faded = 0;
            }
          }
        }
        double fac = kFact[b1] * kFact[b2];
        mul_into(stmp, s, ebs[b1]);
        size_t base = pair_rank(d, b1, b2) * (d + 1);
        for (int l = 0; l <= d; ++l) {
          Cx<R> accv{};
          const auto &wl = w[l];
          for (int m = 0; m <= n; ++m) accv += stmp[m] * wl[m];
          tbl.t[base + l] += accv * fac;
        }
        if (b1 == 0 && b2 == 0) table_tail(tbl, stmp, traits.deriv_scale, hw, n);
      }
    }
  }
  return tbl;
}

// ------------------------------------------------------- member collapse

// sum over beta and l of c_{beta,l} I_{beta,l} / beta!, with the rotation
// layer summed exactly: sum_b3 (ik w)^b3/b3! = e^{ik w}.  The tau/ups power
// ladders are real; only the rotation jet is complex, folded in by one
// convolution per (b1, b2) row.
template <class R>
Cx<R> member_collapse(const DispJets<double> &dj, int d_mem, int weight,
                      const TableCore<R> &tbl) {
  int n = d_mem;
  Jet1<cxd> wk(n);
  for (int m = 0; m <= n; ++m) wk[m] = cxd{0.0, double(weight) * dj.w[m]};
  Jet1<cxd> ew = exp(wk);

  Cx<R> acc{};
  Jet1<double> p1(n), p2, tmp;
  p1[0] = 1.0;
  for (int b1 = 0; b1 <= n; ++b1) {
    p2 = p1;
    for (int b2 = 0; b1 + b2 <= n; ++b2) {
      double inv = 1.0 / (kFact[b1] * kFact[b2]);
      for (int l = 0; l <= n; ++l) {
        cxd cf{};
        for (int j = 0; j <= l; ++j) {
          double rj = p2[j];
          cf.re += rj * ew[l - j].re;
          cf.im += rj * ew[l - j].im;
        }
        acc += Cx<R>{R(cf.re * inv), R(cf.im * inv)} * tbl.at(b1, b2, l);
      }
      if (b1 + b2 < n) {
        mul_into(tmp, p2, dj.ups);
        p2 = tmp;
      }
    }
    if (b1 < n) {
      mul_into(tmp, p1, dj.tau);
      p1 = tmp;
    }
  }
  return acc;
}

// --------------------------------------------------------- direct integrals

// integral of F(v n(t)) e(-t) over [t_lo, t_hi] in fixed chunks (deterministic
// under any thread count); adds into value/err/evals/cells
template <class R>
void direct_horocycle_range(const Form &f, double T, double t_lo, double t_hi,
                            const PipelineParams &pp, double rscale,
                            int threads, Cx<R> &value, double &err,
                            long long &evals, long long &cells) {
  if (!(t_hi > t_lo)) return;
  double span = t_hi - t_lo;
  long long nch = std::clamp<long long>(
      static_cast<long long>(std::ceil(span / 256.0)), 1, 1 << 15);
  std::vector<Cx<R>> vals(nch, Cx<R>{});
  std::vector<double> errs(nch, 0.0);
  std::vector<long long> evs(nch, 0), cls(nch, 0);

  ProviderTraits traits{rscale + kTwoPi, 0};
  QuadratureSpec qs;
  qs.gamma = pp.gamma;
  qs.eps = pp.eps;
  qs.acc_floor = pp.extended ? 1e-30 : 1e-17;
  qs.t_ctx = std::max(T, 2.0);
  GridPlan gp = plan_grid(traits, qs);
  double acc = jet_acc(gp.tol_density / std::max(span, 1.0), gp.h, pp.extended);

  parallel_for(nch, threads, [&](long long i) {
    double a = t_lo + span * double(i) / double(nch);
    double b = (i + 1 == nch) ? t_hi : t_lo + span * double(i + 1) / double(nch);
    auto jets = [&](double u, int order) {
      double t = a + u;
      Reduced<double> red = reduce(mat_horocycle(t, T));
      Jet1<Cx<R>> jet =
          lift_flow_jet(f, promote<R>(red.w), Cx<R>{R(1.0), R(0.0)}, 0.0, order, acc);
      // e(-t - u') jet
      Jet1<Cx<R>> ew(order);
      cxd e0 = cis(-kTwoPi * std::remainder(t, 1.0));
      Cx<R> cur{R(e0.re), R(e0.im)};
      Cx<R> step{R(0.0), R(-kTwoPi)};
      for (int q = 0; q <= order; ++q) {
        ew[q] = cur;
        cur = cur * step * (1.0 / double(q + 1));
      }
      return jet * ew;
    };
    QuadratureSpec qi = qs;
    qi.length = b - a;
    auto r = taylor_grid_integrate(jets, traits, qi);
    vals[i] = r.value;
    errs[i] = r.err_est;
    evs[i] = r.jet_evals;
    cls[i] = r.cells;
  });

  qdetail::Acc<Cx<R>> accv;
  accv.add(value);
  for (long long i = 0; i < nch; ++i) {
    accv.add(vals[i]);
    err += errs[i];
    evals += evs[i];
    cells += cls[i];
  }
  value = accv.get();
}

// ------------------------------------------------------------- fourier

template <class R>
PipelineResult fourier_fast_impl(const Form &f, double T, PipelineParams pp) {
  auto clk0 = std::chrono::steady_clock::now();
  check_exponents(pp.eta, pp.eps);
  FourierPlan plan = plan_fourier_segments(T, pp.eta);
  double rscale = resolve_scale(f, pp);
  double delta =
      pp.delta_override > 0 ? pp.delta_override : std::pow(T, -(2.0 * pp.eta + pp.eps));
  double bits = order_bits(T, pp.gamma);
  int threads = resolve_threads(pp);
  double mlen = double(plan.m);

  Grouper g;
  g.model = admit_model(0.5 * mlen, bits, rscale);
  g.caps = admission_caps(delta, g.model);
  g.delta = delta;
  g.singleton = pp.force_singleton;
  for (long long j = 0; j < plan.count; ++j) {
    Reduced<double> red = reduce(plan.base(j));
    Nak<double> q = nak_of(red.w);
    psl_fold(red.w, q);
    g.insert(red.w, q, static_cast<int>(j));
  }

  long long ngroups = static_cast<long long>(g.groups.size());
  std::vector<Cx<R>> gval(ngroups, Cx<R>{});
  std::vector<double> gerr(ngroups, 0.0);
  std::vector<long long> gev(ngroups, 0);

  parallel_for(ngroups, threads, [&](long long gi) {
    const SegmentGroup &grp = g.groups[gi];
    // member displacements and the group expansion order
    std::vector<DispJets<double>> djs;
    djs.reserve(grp.members.size());
    std::vector<int> dmem(grp.members.size(), 0);
    std::vector<double> qmem(grp.members.size(), 0.0);
    int dg = 0;
    Mat2<double> vinv = inv_unimodular(grp.v);
    for (size_t mi = 0; mi < grp.members.size(); ++mi) {
      Reduced<double> red = reduce(plan.base(grp.members[mi]));
      Nak<double> q = nak_of(red.w);
      psl_fold(red.w, q);
      Mat2<double> A = vinv * red.w;
      qmem[mi] = member_ratio(A, g.model);
      int dm = pp.d >= 0 ? std::min(pp.d, kMaxOrder) : adapt_d(qmem[mi], bits);
      if (dm < 0) dm = kMaxOrder;  // admission keeps this unreachable
      dmem[mi] = dm;
      dg = std::max(dg, dm);
      djs.push_back(displacement_jets(A, dm));
    }
    if (pp.d >= 0) dg = std::min(pp.d, kMaxOrder);

    TableCore<R> tbl = batch_I_core<R>(f, grp.v, dg, mlen, T, pp, rscale);
    qdetail::Acc<Cx<R>> sub;
    double tnorm = std::sqrt(dbl(norm2(tbl.at(0, 0, 0))));
    double tail = 0.0;
    for (size_t mi = 0; mi < grp.members.size(); ++mi) {
      sub.add(member_collapse(djs[mi], dmem[mi], f.weight, tbl));
      double qm = qmem[mi];
      tail += qm < 1.0 ? std::exp2(kPrefBits) * std::pow(qm, dmem[mi] + 1) /
                             (1.0 - qm) * tnorm
                       : tnorm;
    }
    gval[gi] = sub.get();
    gerr[gi] = tbl.err_est * double(grp.members.size()) + tail;
    gev[gi] = tbl.jet_evals;
  });

  PipelineResult out;
  qdetail::Acc<Cx<R>> total;
  for (long long gi = 0; gi < ngroups; ++gi) {
    total.add(gval[gi]);
    out.err_est += gerr[gi];
    out.jet_evals += gev[gi];
  }
  Cx<R> tv = total.get();
  // segment parameter is offset to the midpoint: t = j m + m/2 + s, and
  // e(-(j m + m/2)) = (-1)^m since j m is an integer
  if (plan.m % 2 != 0) tv = -tv;
  out.groups = ngroups;
  out.segments = plan.count + (plan.rem0 < T ? 1 : 0);

  if (plan.rem0 < T) {
    long long rem_cells = 0;
    direct_horocycle_range(f, T, plan.rem0, T, pp, rscale, threads, tv,
                           out.err_est, out.jet_evals, rem_cells);
  }

  // scale back to the coefficient
  double tpow = std::pow(T, 0.5 * f.weight - 1.0);
  cxd raw{dbl(tv.re), dbl(tv.im)};
  if (f.kind == FormKind::holomorphic) {
    double s = std::exp(kTwoPi) * tpow;
    out.value = raw * s;
    out.err_est *= s;
  } else {
    cxd kv = bessel_k(cxd{f.r, 0.0}, kTwoPi);
    cxd den = kv * T;
    out.value = raw / den;
    out.err_est /= std::sqrt(dbl(norm2(den)));
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - clk0).count();
  return out;
}

template <class R>
PipelineResult fourier_direct_impl(const Form &f, double T, PipelineParams pp) {
  auto clk0 = std::chrono::steady_clock::now();
  if (!(T >= 1.0) || std::floor(T) != T)
    throw input_error("fourier: T must be a positive integer");
  double rscale = resolve_scale(f, pp);
  int threads = resolve_threads(pp);
  PipelineResult out;
  Cx<R> tv{};
  long long cells = 0;
  direct_horocycle_range(f, T, 0.0, T, pp, rscale, threads, tv, out.err_est,
                         out.jet_evals, cells);
  out.segments = 1;
  out.groups = 0;
  double tpow = std::pow(T, 0.5 * f.weight - 1.0);
  cxd raw{dbl(tv.re), dbl(tv.im)};
  if (f.kind == FormKind::holomorphic) {
    double s = std::exp(kTwoPi) * tpow;
    out.value = raw * s;
    out.err_est *= s;
  } else {
    cxd kv = bessel_k(cxd{f.r, 0.0}, kTwoPi);
    cxd den = kv * T;
    out.value = raw / den;
    out.err_est /= std::sqrt(dbl(norm2(den)));
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - clk0).count();
  return out;
}

// ------------------------------------------------------------- lvalue

template <class R>
PipelineResult lvalue_fast_impl(const Form &f, double T, PipelineParams pp) {
  auto clk0 = std::chrono::steady_clock::now();
  check_exponents(pp.eta, pp.eps);
  ContourSpec cs = f.kind == FormKind::holomorphic ? holo_contour(f, T, pp.gamma)
                                                   : maass_contour(f, T, pp.gamma);
  LvaluePlan plan = plan_lvalue_segments(cs, pp.eta);
  double rscale = resolve_scale(f, pp);
  double delta = pp.delta_override > 0
                     ? pp.delta_override
                     : std::pow(cs.Tt, -(2.0 * pp.eta + pp.eps));
  double bits = order_bits(T, pp.gamma);
  int threads = resolve_threads(pp);

  Grouper g;
  // omega tables keep their left anchor (the ladder weight is one-sided), so
  // the model sees the full window as reach
  g.model = admit_model(plan.m, bits, rscale);
  g.caps = admission_caps(delta, g.model);
  g.delta = delta;
  g.singleton = pp.force_singleton;
  for (size_t j = 0; j < plan.segs.size(); ++j) {
    const LSegment &s = plan.segs[j];
    if (s.m_len < plan.m * (1.0 - 1e-12)) {
      // clipped rung: own group so the table span matches
      Reduced<double> red = reduce(mat_kappa(s.b, cs.Tt));
      Nak<double> q = nak_of(red.w);
      psl_fold(red.w, q);
      int gi = static_cast<int>(g.groups.size());
      g.groups.push_back(SegmentGroup{red.w, q, {static_cast<int>(j)}});
      (void)gi;
      continue;
    }
    Reduced<double> red = reduce(mat_kappa(s.b, cs.Tt));
    Nak<double> q = nak_of(red.w);
    psl_fold(red.w, q);
    g.insert(red.w, q, static_cast<int>(j));
  }

  long long ngroups = static_cast<long long>(g.groups.size());
  std::vector<Cx<R>> gval(ngroups, Cx<R>{});
  std::vector<double> gerr(ngroups, 0.0);
  std::vector<long long> gev(ngroups, 0);

  parallel_for(ngroups, threads, [&](long long gi) {
    const SegmentGroup &grp = g.groups[gi];
    double mlen = plan.segs[grp.members[0]].m_len;
    std::vector<DispJets<double>> djs;
    djs.reserve(grp.members.size());
    std::vector<int> dmem(grp.members.size(), 0);
    std::vector<double> qmem(grp.members.size(), 0.0);
    int dg = 0;
    Mat2<double> vinv = inv_unimodular(grp.v);
    AdmitModel gm = admit_model(mlen, bits, rscale);  // clipped rungs are shorter
    for (size_t mi = 0; mi < grp.members.size(); ++mi) {
      const LSegment &s = plan.segs[grp.members[mi]];
      Reduced<double> red = reduce(mat_kappa(s.b, cs.Tt));
      Nak<double> q = nak_of(red.w);
      psl_fold(red.w, q);
      Mat2<double> A = vinv * red.w;
      qmem[mi] = member_ratio(A, gm);
      int dm = pp.d >= 0 ? std::min(pp.d, kMaxOrder) : adapt_d(qmem[mi], bits);
      if (dm < 0) dm = kMaxOrder;  // admission keeps this unreachable
      dmem[mi] = dm;
      dg = std::max(dg, dm);
      djs.push_back(displacement_jets_omega(A, cs.Tt, dm));
    }
    if (pp.d >= 0) dg = std::min(pp.d, kMaxOrder);

    TableCore<R> tbl = batch_L_core<R>(f, cs, grp.v, dg, mlen, pp, rscale);
    qdetail::Acc<Cx<R>> sub;
    double tnorm = std::sqrt(dbl(norm2(tbl.at(0, 0, 0))));
    double tail = 0.0;
    for (size_t mi = 0; mi < grp.members.size(); ++mi) {
      const LSegment &s = plan.segs[grp.members[mi]];
      Cx<R> term = member_collapse(djs[mi], dmem[mi], f.weight, tbl);
      cxd ph = cis(s.a_y.arg);
      sub.add(term * Cx<R>{R(ph.re), R(ph.im)});
      double qm = qmem[mi];
      tail += qm < 1.0 ? std::exp2(kPrefBits) * std::pow(qm, dmem[mi] + 1) /
                             (1.0 - qm) * tnorm
                       : tnorm;
    }
    gval[gi] = sub.get();
    gerr[gi] = tbl.err_est * double(grp.members.size()) + tail;
    gev[gi] = tbl.jet_evals;
  });

  PipelineResult out;
  qdetail::Acc<Cx<R>> total;
  for (long long gi = 0; gi < ngroups; ++gi) {
    total.add(gval[gi]);
    out.err_est += gerr[gi];
    out.jet_evals += gev[gi];
  }
  out.groups = ngroups;
  out.segments = static_cast<long long>(plan.segs.size());

  // the canonical integral of f(alpha t) t^(nu-1) equals
  // Tt^(k/2-1) * sum_j b_j^(iT) S_j: Tt^(k/2) converts the lift back to f,
  // 1/Tt is dt/du, and b_j^(nu-k/2) = b_j^(iT) is the phase already applied
  LogComplex scale{(0.5 * f.weight - 1.0) * std::log(cs.Tt), 0.0};
  cxd raw{dbl(total.get().re), dbl(total.get().im)};
  auto [lv, note] = assemble_L(cs, raw, scale, out.err_est);
  out.value = lv;
  out.err_est = note;
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - clk0).count();
  return out;
}

template <class R>
PipelineResult lvalue_direct_impl(const Form &f, double T, PipelineParams pp) {
  auto clk0 = std::chrono::steady_clock::now();
  ContourSpec cs = f.kind == FormKind::holomorphic ? holo_contour(f, T, pp.gamma)
                                                   : maass_contour(f, T, pp.gamma);
  double rscale = resolve_scale(f, pp);
  int threads = resolve_threads(pp);
  double Tt = cs.Tt;
  cxd wexp = cs.nu - cxd{0.5 * f.weight + 1.0, 0.0};  // t-exponent, nu-1-k/2

  // geometric chunks: the oscillation rate of t^(nu-1) and the flow scale both
  // fall off like 1/t, so each octave gets a grid matched to its own scale
  double t0 = cs.window.t0, t1 = cs.window.t1;
  long long nch = std::max<long long>(1, (long long)std::ceil(std::log2(t1 / t0)));
  std::vector<cxd> vals(nch);
  std::vector<double> errs(nch, 0.0);
  std::vector<long long> evs(nch, 0);

  parallel_for(nch, threads, [&](long long i) {
    double a = t0 * std::pow(2.0, double(i));
    double b = std::min(t1, 2.0 * a);
    if (!(b > a)) return;
    double rs = (rscale * Tt + std::abs(cs.nu.im) + f.weight + 2.0) / a;
    ProviderTraits traits{rs, 0};
    QuadratureSpec qi;
    qi.length = b - a;
    qi.gamma = pp.gamma;
    qi.eps = pp.eps;
    qi.acc_floor = pp.extended ? 1e-30 : 1e-17;
    qi.t_ctx = std::max(cs.T, 2.0);
    GridPlan gp = plan_grid(traits, qi);
    double acc = jet_acc(gp.tol_density, gp.h, pp.extended);
    auto jets = [&](double u, int order) {
      double t = a + u;
      Reduced<double> red = reduce(mat_kappa(t, Tt));
      // flow in the omega parameter s at base t: t(1 + s/Tt) = t + h,
      // h-jet coefficients pick up (Tt/t)^m
      Jet1<Cx<R>> jf = lift_flow_jet(f, promote<R>(red.w),
                                     Cx<R>{R(-1.0), R(1.0 / Tt)}, Tt, order, acc);
      double chain = Tt / t, cp = 1.0;
      for (int m = 1; m <= order; ++m) {
        cp *= chain;
        jf[m] = jf[m] * cp;
      }
      Jet1<R> tb(order);
      tb[0] = R(t);
      if (order >= 1) tb[1] = R(1.0);
      Jet1<Cx<R>> wj = pow_jet_c(tb, Cx<R>{R(wexp.re), R(wexp.im)});
      return jf * wj;
    };
    auto r = taylor_grid_integrate(jets, traits, qi);
    vals[i] = cxd{dbl(r.value.re), dbl(r.value.im)};
    errs[i] = r.err_est;
    evs[i] = r.jet_evals;
  });

  PipelineResult out;
  qdetail::Acc<cxd> total;
  for (long long i = 0; i < nch; ++i) {
    total.add(vals[i]);
    out.err_est += errs[i];
    out.jet_evals += evs[i];
  }
  out.segments = nch;
  out.groups = 0;
  LogComplex scale{0.5 * f.weight * std::log(Tt), 0.0};
  auto [lv, note] = assemble_L(cs, total.get(), scale, out.err_est);
  out.value = lv;
  out.err_est = note;
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - clk0).count();
  return out;
}

}  // namespace

// ----------------------------------------------------------- public surface

std::vector<SegmentGroup> group_segments(const std::vector<Mat2<double>> &pts,
                                         double delta, double m_len,
                                         double rscale) {
  if (!(delta > 0)) throw input_error("group_segments: delta must be positive");
  Grouper g;
  // mirror the fourier pipeline: centered window, full order budget
  g.model = admit_model(0.5 * m_len, 46.0, rscale);
  g.caps = admission_caps(delta, g.model);
  g.delta = delta;
  for (size_t j = 0; j < pts.size(); ++j) {
    Reduced<double> red = reduce(pts[j]);
    Nak<double> q = nak_of(red.w);
    psl_fold(red.w, q);
    g.insert(red.w, q, static_cast<int>(j));
  }
  return std::move(g.groups);
}

std::size_t CoeffTable::idx(int b1, int b2, int b3, int l) const {
  std::size_t rank = 0;
  for (int i = 0; i < b1; ++i) {
    int m = d - i;
    rank += static_cast<size_t>(m + 1) * (m + 2) / 2;
  }
  for (int j = 0; j < b2; ++j) rank += static_cast<size_t>(d - b1 - j + 1);
  rank += static_cast<size_t>(b3);
  return rank * (d + 1) + static_cast<size_t>(l);
}

namespace {

CoeffTable expansion_from_jets(const DispJets<double> &dj, int d) {
  CoeffTable out;
  out.d = d;
  std::size_t nsimplex = 0;
  for (int i = 0; i <= d; ++i) {
    int m = d - i;
    nsimplex += static_cast<size_t>(m + 1) * (m + 2) / 2;
  }
  out.c.assign(nsimplex * (d + 1), cxd{});
  Jet1<double> p1(d);
  p1[0] = 1.0;
  Jet1<double> p2, p3, tmp;
  for (int b1 = 0; b1 <= d; ++b1) {
    p2 = p1;
    for (int b2 = 0; b1 + b2 <= d; ++b2) {
      p3 = p2;
      for (int b3 = 0; b1 + b2 + b3 <= d; ++b3) {
        for (int l = 0; l <= d; ++l)
          out.c[out.idx(b1, b2, b3, l)] = cxd{p3[l], 0.0};
        if (b1 + b2 + b3 < d) {
          mul_into(tmp, p3, dj.w);
          p3 = tmp;
        }
      }
      if (b1 + b2 < d) {
        mul_into(tmp, p2, dj.ups);
        p2 = tmp;
      }
    }
    if (b1 < d) {
      mul_into(tmp, p1, dj.tau);
      p1 = tmp;
    }
  }
  return out;
}

}  // namespace

CoeffTable expansion_coeffs_n(const Mat2<double> &v, const Mat2<double> &x, int d) {
  Mat2<double> A = inv_unimodular(v) * x;
  return expansion_from_jets(displacement_jets(A, d), d);
}

CoeffTable expansion_coeffs_omega(const Mat2<double> &v, const Mat2<double> &x,
                                  int d, double big_t) {
  Mat2<double> A = inv_unimodular(v) * x;
  return expansion_from_jets(displacement_jets_omega(A, big_t, d), d);
}

std::size_t IntegralTable::pidx(int b1, int b2, int l) const {
  return pair_rank(d, b1, b2) * (d + 1) + static_cast<size_t>(l);
}

cxd IntegralTable::at(int b1, int b2, int b3, int l) const {
  return t[pidx(b1, b2, l)] * powi(cxd{0.0, double(weight)}, b3);
}

IntegralTable batch_I(const Form &f, const Mat2<double> &v, int d, double m_len,
                      double T_ctx, const PipelineParams &pp) {
  double rscale = resolve_scale(f, pp);
  TableCore<double> core = batch_I_core<double>(f, v, d, m_len, T_ctx, pp, rscale);
  IntegralTable out;
  out.d = core.d;
  out.weight = core.weight;
  out.t = std::move(core.t);
  out.err_est = core.err_est;
  out.jet_evals = core.jet_evals;
  return out;
}

IntegralTable batch_L(const Form &f, const ContourSpec &c, const Mat2<double> &v,
                      int d, double m_len, const PipelineParams &pp) {
  double rscale = resolve_scale(f, pp);
  TableCore<double> core = batch_L_core<double>(f, c, v, d, m_len, pp, rscale);
  IntegralTable out;
  out.d = core.d;
  out.weight = core.weight;
  out.t = std::move(core.t);
  out.err_est = core.err_est;
  out.jet_evals = core.jet_evals;
  return out;
}

PipelineResult fourier_fast(const Form &f, double T, const PipelineParams &pp) {
  return pp.extended ? fourier_fast_impl<dd>(f, T, pp)
                     : fourier_fast_impl<double>(f, T, pp);
}
PipelineResult fourier_direct(const Form &f, double T, const PipelineParams &pp) {
  return pp.extended ? fourier_direct_impl<dd>(f, T, pp)
                     : fourier_direct_impl<double>(f, T, pp);
}
PipelineResult lvalue_fast(const Form &f, double T, const PipelineParams &pp) {
  return pp.extended ? lvalue_fast_impl<dd>(f, T, pp)
                     : lvalue_fast_impl<double>(f, T, pp);
}
PipelineResult lvalue_direct(const Form &f, double T, const PipelineParams &pp) {
  return pp.extended ? lvalue_direct_impl<dd>(f, T, pp)
                     : lvalue_direct_impl<double>(f, T, pp);
}

}  // namespace lfun
