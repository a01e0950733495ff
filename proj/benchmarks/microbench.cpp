// Micro benchmarks for the hot kernels: jet products, lifted-jet evaluation,
// frame reduction, and one full table build.  Run manually; not part of ctest.
#include <benchmark/benchmark.h>

#include "lfun/engine.hpp"
#include "lfun/forms.hpp"
#include "lfun/geometry.hpp"
#include "lfun/jet.hpp"

using namespace lfun;

namespace {

Form delta(int n) {
  DeltaTable dt = gen_delta(n);
  Form f;
  f.kind = FormKind::holomorphic;
  f.weight = 12;
  f.coeffs = dt.value;
  f.coeffs_exact = true;
  return f;
}

void bm_jet_mul(benchmark::State &state) {
  int n = int(state.range(0));
  Jet1<Cx<double>> a(n), b(n), r(n);
  for (int m = 0; m <= n; ++m) {
    a[m] = cxd{1.0 / (m + 1.0), 0.3};
    b[m] = cxd{0.2, -1.0 / (m + 2.0)};
  }
  for (auto _ : state) {
    mul_into(r, a, b);
    benchmark::DoNotOptimize(r[n]);
  }
}
BENCHMARK(bm_jet_mul)->Arg(8)->Arg(16)->Arg(32)->Arg(64);

void bm_reduce(benchmark::State &state) {
  double t = 0.0;
  for (auto _ : state) {
    t += 1.0 / 4096.0;
    Reduced<double> red = reduce(mat_horocycle(t, 4096.0));
    benchmark::DoNotOptimize(red.w.a);
  }
}
BENCHMARK(bm_reduce);

void bm_flow_jet(benchmark::State &state) {
  Form f = delta(256);
  int n = int(state.range(0));
  Reduced<double> red = reduce(mat_horocycle(0.37, 1024.0));
  for (auto _ : state) {
    auto j = lift_flow_jet(f, red.w, cxd{1.0, 0.0}, 0.0, n, 1e-14);
    benchmark::DoNotOptimize(j[n]);
  }
}
BENCHMARK(bm_flow_jet)->Arg(8)->Arg(16)->Arg(24)->Arg(32);

void bm_rect_jet(benchmark::State &state) {
  Form f = delta(256);
  int d = int(state.range(0));
  Reduced<double> red = reduce(mat_horocycle(0.37, 1024.0));
  for (auto _ : state) {
    auto r = lift_rect_jet(f, red.w, d + 24, d, 1e-14);
    benchmark::DoNotOptimize(r.at(0, 0));
  }
}
BENCHMARK(bm_rect_jet)->Arg(4)->Arg(8)->Arg(16)->Arg(29);

void bm_batch_I(benchmark::State &state) {
  Form f = delta(256);
  PipelineParams pp;
  Reduced<double> red = reduce(mat_horocycle(0.37, 4096.0));
  int d = int(state.range(0));
  for (auto _ : state) {
    IntegralTable t = batch_I(f, red.w, d, 2.0, 4096.0, pp);
    benchmark::DoNotOptimize(t.err_est);
  }
}
BENCHMARK(bm_batch_I)->Arg(0)->Arg(4)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
