#pragma once
#include <cstdint>
#include <vector>

#include "lfun/forms.hpp"
#include "lfun/geometry.hpp"
#include "lfun/geomfe.hpp"
#include "lfun/quadrature.hpp"

// Pipelines for the two quantities of interest:
//   fourier:  the T-th coefficient, from the weighted lift integrated along
//             the depth-1/T horocycle against e(-t)
//   lvalue:   L(f, 1/2 + iT), from the truncated ray integral (geomfe.hpp)
// Each has a direct mode (one grid pass along the whole curve, O(T) cells)
// and a fast mode: the curve is cut into unit-parameter segments of inner
// length M = floor(T^eta), segment midpoint frames are pulled back to the
// fundamental domain, segments whose reduced frames agree to delta (and whose
// displacement expansions converge fast enough) share one batched table of
// integrals, and each member is recovered from that table through a short
// displacement expansion.  delta = T^-(2 eta + eps).

namespace lfun {

struct PipelineParams {
  double gamma = 4.0;   // accuracy target T^-gamma
  double eps = 0.0625;  // frame-match exponent; requires eps < 1 - 3 eta
  double eta = 0.125;   // segment-length exponent, M = floor(T^eta)
  int d = -1;           // expansion order: -1 = per-member adaptive
  int threads = 0;      // <= 0: all hardware threads (or LFUN_THREADS)
  bool extended = false;  // double-double integrand accumulation
  // test hooks
  bool force_singleton = false;  // one group per segment
  double delta_override = 0.0;   // replaces T^-(2 eta + eps) when > 0
  double deriv_scale = 0.0;      // replaces the estimated jet growth scale
};

struct PipelineResult {
  cxd value{};
  double err_est = 0.0;
  double wall_seconds = 0.0;
  long long jet_evals = 0;  // lifted-jet evaluations (one per grid cell)
  long long groups = 0;
  long long segments = 0;
};

// ---- planning ----

struct FourierPlan {
  double T = 0;
  long long m = 1;      // inner segment length, floor(T^eta)
  long long count = 0;  // full segments; segment j covers t in [j m, (j+1) m)
  double rem0 = 0;      // remainder start m*count; remainder is [rem0, T)
  Mat2<double> x0{1, 0, 0, 1};  // a(-log T)
  Mat2<double> base(long long j) const;  // x0 * n(j m + m/2), the midpoint
};
FourierPlan plan_fourier_segments(double T, double eta);

struct LSegment {
  long long index = 0;
  double b = 0;      // ladder point; the segment covers t in [b, b(1 + m/Tt)]
  double m_len = 0;  // inner parameter length (clipped on the last rung)
  LogComplex a_y{};  // segment weight Tt^(k/2-1) b^(nu-k/2)
};
struct LvaluePlan {
  double m = 0;  // Tt^eta
  std::vector<LSegment> segs;
};
LvaluePlan plan_lvalue_segments(const ContourSpec &c, double eta);

// ---- grouping ----

struct SegmentGroup {
  Mat2<double> v{1, 0, 0, 1};  // representative: reduced, theta-folded
  Nak<double> q{};             // its frame coordinates
  std::vector<int> members;    // indices into the planned segment list
};

// Cluster base points by reduced frame.  Admission into a group is verified
// against the representative: in_neighborhood(v^-1 x, delta) plus a
// convergence test that keeps the displacement expansion of every admitted
// member geometric with tail below the order cap (engine.cpp, AdmitModel).
std::vector<SegmentGroup> group_segments(const std::vector<Mat2<double>> &pts,
                                         double delta, double m_len,
                                         double rscale);

// ---- expansion tables ----

// c_{beta,l}: coefficient of t^l in the beta-th frame-displacement monomial
// h1^b1 h2^b2 h3^b3 of x relative to v along the named flow.  The lifted
// form at x's flow point is sum_beta (D^beta F)(v flow(t)) c_beta(t) / beta!.
struct CoeffTable {
  int d = 0;
  std::vector<cxd> c;  // beta simplex (|beta| <= d) x power l in 0..d
  std::size_t idx(int b1, int b2, int b3, int l) const;
  cxd at(int b1, int b2, int b3, int l) const { return c[idx(b1, b2, b3, l)]; }
};

CoeffTable expansion_coeffs_n(const Mat2<double> &v, const Mat2<double> &x, int d);
CoeffTable expansion_coeffs_omega(const Mat2<double> &v, const Mat2<double> &x,
                                  int d, double big_t);

// I_{beta,l} = integral of t^l (D^beta F)(v flow(t)) x (flow weight) dt over
// one segment.  Stored per (b1, b2) pair; the rotation layer is exact:
// at(b1,b2,b3,l) = (ik)^b3 * stored(b1,b2,l).
struct IntegralTable {
  int d = 0;
  int weight = 0;
  std::vector<cxd> t;  // (b1,b2) pair simplex x power l in 0..d
  double err_est = 0.0;
  long long jet_evals = 0;
  std::size_t pidx(int b1, int b2, int l) const;
  cxd at(int b1, int b2, int b3, int l) const;
};

// Fourier-side table at representative v: weight e(-t), flow n(t), symmetric
// window t in [-m_len/2, m_len/2] about the representative.
IntegralTable batch_I(const Form &f, const Mat2<double> &v, int d, double m_len,
                      double T_ctx, const PipelineParams &pp);
// L-side table at representative v: weight (1+u/Tt)^(nu-k/2-1), flow omega(u).
IntegralTable batch_L(const Form &f, const ContourSpec &c, const Mat2<double> &v,
                      int d, double m_len, const PipelineParams &pp);

// ---- pipelines ----

PipelineResult fourier_fast(const Form &f, double T, const PipelineParams &pp = {});
PipelineResult fourier_direct(const Form &f, double T, const PipelineParams &pp = {});
PipelineResult lvalue_fast(const Form &f, double T, const PipelineParams &pp = {});
PipelineResult lvalue_direct(const Form &f, double T, const PipelineParams &pp = {});

// Validate the exponent relation the segmentation needs; throws input_error.
void check_exponents(double eta, double eps);

}  // namespace lfun
