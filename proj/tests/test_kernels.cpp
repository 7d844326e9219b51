#include <doctest.h>

#include <cmath>
#include <vector>

#include "blockdep/kernels.hpp"
#include "blockdep/rng.hpp"

using namespace blockdep;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

// reductions reassociate across backends: compare to a relative tolerance
bool close(double a, double b, double scale) {
  return std::fabs(a - b) <= 1e-12 * (scale + std::fabs(a) + std::fabs(b));
}

}  // namespace

TEST_CASE("scalar and simd kernel tables agree") {
  const kernels::Backend& ref = kernels::scalar();
  const kernels::Backend* simd = kernels::avx2_or_null();
  if (simd == nullptr) {
    MESSAGE("AVX2 unavailable; dispatch falls back to scalar");
    CHECK(std::string(kernels::active().name) == "scalar");
    return;
  }

  Rng rng(99);
  // ragged lengths cover the vector body and every tail shape
  for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 31u, 128u, 1001u}) {
    auto x = random_vec(n, rng, 2.0);
    auto y = random_vec(n, rng, 3.0);

    CHECK(close(ref.dot(x.data(), y.data(), n), simd->dot(x.data(), y.data(), n),
                static_cast<double>(n)));
    CHECK(close(ref.sum(x.data(), n), simd->sum(x.data(), n),
                static_cast<double>(n)));
    CHECK(close(ref.sumsq(x.data(), n), simd->sumsq(x.data(), n),
                static_cast<double>(n)));
    CHECK(ref.max_abs(x.data(), n) == simd->max_abs(x.data(), n));

    auto ya = y, yb = y;
    ref.axpy(0.7, x.data(), ya.data(), n);
    simd->axpy(0.7, x.data(), yb.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(ya[i] == doctest::Approx(yb[i]));

    auto sa = x, sb = x;
    ref.scale(-1.3, sa.data(), n);
    simd->scale(-1.3, sb.data(), n);
    CHECK(sa == sb);

    std::vector<double> da(n), db(n);
    ref.sub(x.data(), y.data(), da.data(), n);
    simd->sub(x.data(), y.data(), db.data(), n);
    CHECK(da == db);

    std::vector<double> ta(n), tb(n);
    ref.soft_threshold(x.data(), 0.8, ta.data(), n);
    simd->soft_threshold(x.data(), 0.8, tb.data(), n);
    CHECK(ta == tb);

    ref.clamp(x.data(), -0.5, 1.25, ta.data(), n);
    simd->clamp(x.data(), -0.5, 1.25, tb.data(), n);
    CHECK(ta == tb);

    double s1, q1, s2, q2;
    ref.dot_and_sq(x.data(), y.data(), n, &s1, &q1);
    simd->dot_and_sq(x.data(), y.data(), n, &s2, &q2);
    CHECK(close(s1, s2, static_cast<double>(n)));
    CHECK(close(q1, q2, static_cast<double>(n)));
  }
}

TEST_CASE("soft threshold matches its definition") {
  const kernels::Backend& k = kernels::active();
  std::vector<double> v = {-3.0, -1.0, -0.2, 0.0, 0.2, 1.0, 3.0};
  std::vector<double> out(v.size());
  k.soft_threshold(v.data(), 1.0, out.data(), v.size());
  std::vector<double> want = {-2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0};
  CHECK(out == want);
}

TEST_CASE("dot is linear in each argument") {
  const kernels::Backend& k = kernels::active();
  Rng rng(7);
  auto x = random_vec(257, rng);
  auto y = random_vec(257, rng);
  auto z = random_vec(257, rng);
  std::vector<double> xy(257);
  for (std::size_t i = 0; i < 257; ++i) xy[i] = x[i] + 2.0 * y[i];
  const double lhs = k.dot(xy.data(), z.data(), 257);
  const double rhs =
      k.dot(x.data(), z.data(), 257) + 2.0 * k.dot(y.data(), z.data(), 257);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}
