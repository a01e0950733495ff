// End-to-end smoke: every module linked, one tiny run through each pipeline.
#include "doctest.h"

#include "lfun/engine.hpp"
#include "lfun/forms.hpp"
#include "lfun/selftest.hpp"

#include <sstream>

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
}  // namespace

TEST_CASE("pipelines produce finite values at tiny T") {
  Form f = delta(256);
  PipelineParams pp;
  auto fd = fourier_direct(f, 16.0, pp);
  CHECK(cx_isfinite(fd.value));
  // tau(16) = 987136
  CHECK(std::abs(fd.value.re - 987136.0) <= 1e-3 * 987136.0);
  auto ff = fourier_fast(f, 16.0, pp);
  CHECK(std::abs(ff.value.re - fd.value.re) <= 1e-5 * std::abs(fd.value.re));

  auto ld = lvalue_direct(f, 12.0, pp);
  CHECK(cx_isfinite(ld.value));
  auto lf = lvalue_fast(f, 12.0, pp);
  CHECK(cx_isfinite(lf.value));
  CHECK(abs(cxd{lf.value.re - ld.value.re, lf.value.im - ld.value.im}) <= 1e-4);
}

TEST_CASE("selftest passes on a fresh build") {
  std::ostringstream rep;
  bool ok = run_selftest(rep);
  INFO(rep.str());
  CHECK(ok);
}
