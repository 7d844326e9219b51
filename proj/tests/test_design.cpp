#include <doctest.h>

#include <cmath>

#include "blockdep/design.hpp"
#include "blockdep/errors.hpp"
#include "blockdep/harness.hpp"
#include "oracles.hpp"

using namespace blockdep;

namespace {

Partition contiguous_blocks(std::size_t p, std::size_t block) {
  Partition partition;
  partition.p = p;
  std::uint32_t next = 0;
  while (next < p) {
    std::vector<std::uint32_t> cell;
    for (std::size_t t = 0; t < block && next < p; ++t) cell.push_back(next++);
    partition.cells.push_back(std::move(cell));
  }
  return partition;
}

DesignSpec basic_spec(std::size_t n, std::size_t p, EntryFamily family,
                      CovarianceSpec cov) {
  DesignSpec spec;
  spec.n = n;
  spec.p = p;
  spec.covariance = std::move(cov);
  spec.family = family;
  return spec;
}

}  // namespace

TEST_CASE("build_sigma: identity, equicorrelated, rejections") {
  SUBCASE("identity") {
    const auto out =
        build_sigma(CovarianceSpec::identity(contiguous_blocks(3, 1)));
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        CHECK(out.sigma(i, j) == (i == j ? 1.0 : 0.0));
    CHECK(out.lambda_max == doctest::Approx(1.0));
  }
  SUBCASE("one equicorrelated pair") {
    const auto out = build_sigma(
        CovarianceSpec::equicorrelated(contiguous_blocks(2, 2), 0.5));
    CHECK(out.sigma(0, 1) == 0.5);
    CHECK(out.lambda_max == doctest::Approx(1.5).epsilon(1e-10));
  }
  SUBCASE("rho below the PSD boundary is rejected naming the block") {
    CHECK_THROWS_WITH_AS(
        build_sigma(
            CovarianceSpec::equicorrelated(contiguous_blocks(3, 3), -0.9)),
        doctest::Contains("block 1"), ValidationError);
  }
  SUBCASE("negative rho above the boundary passes") {
    CHECK_NOTHROW(build_sigma(
        CovarianceSpec::equicorrelated(contiguous_blocks(3, 3), -0.45)));
  }
  SUBCASE("explicit non-PSD block is rejected by index") {
    CovarianceSpec cov;
    cov.partition = contiguous_blocks(3, 1);
    cov.model = CovarianceSpec::Model::explicit_blocks;
    Matrix ok(1, 1), bad(1, 1);
    ok(0, 0) = 2.0;
    bad(0, 0) = -1.0;
    cov.blocks = {ok, bad, ok};
    CHECK_THROWS_WITH_AS(build_sigma(cov), doctest::Contains("block 2"),
                         ValidationError);
  }
}

TEST_CASE("power-iteration lambda_max matches a dense eigensolver, p <= 64") {
  Rng rng(1234);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t p = 4 + rng.next_u64() % 61;
    const std::size_t block = 1 + rng.next_u64() % 8;
    const double rho = -0.1 + 0.9 * rng.uniform01();
    const auto out =
        build_sigma(CovarianceSpec::equicorrelated(contiguous_blocks(p, block), rho));
    const double dense = oracles::jacobi_max_eigenvalue(out.sigma);
    CHECK(std::fabs(out.lambda_max - dense) <= 1e-8);
  }
  // explicit random PSD blocks as well
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t b = 2 + rng.next_u64() % 7;
    Matrix g(b, b);
    for (auto& v : g.data) v = rng.normal();
    Matrix psd(b, b);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < b; ++j) {
        double acc = i == j ? 0.1 : 0.0;
        for (std::size_t t = 0; t < b; ++t) acc += g(i, t) * g(j, t);
        psd(i, j) = acc;
      }
    CovarianceSpec cov;
    cov.partition = contiguous_blocks(b, b);
    cov.model = CovarianceSpec::Model::explicit_blocks;
    cov.blocks = {psd};
    const auto out = build_sigma(cov);
    CHECK(std::fabs(out.lambda_max - oracles::jacobi_max_eigenvalue(psd)) <=
          1e-8);
  }
}

TEST_CASE("sampling determinism and independence of the analogue stream") {
  const auto spec = basic_spec(8, 6, EntryFamily::rademacher,
                               CovarianceSpec::identity(contiguous_blocks(6, 2)));
  const Matrix a = sample_design(spec, 42);
  const Matrix b = sample_design(spec, 42);
  CHECK(a.data == b.data);
  const Matrix g1 = gaussian_analogue(spec, 42);
  const Matrix g2 = gaussian_analogue(spec, 42);
  CHECK(g1.data == g2.data);
  CHECK(a.data != g1.data);
  const Matrix c = sample_design(spec, 43);
  CHECK(a.data != c.data);
}

TEST_CASE("standardized families have unit variance (seeded Monte Carlo)") {
  const std::size_t draws = 1000000;
  for (EntryFamily family :
       {EntryFamily::uniform, EntryFamily::rademacher,
        EntryFamily::centered_exponential, EntryFamily::gaussian,
        EntryFamily::student_t}) {
    auto spec = basic_spec(draws, 1, family,
                           CovarianceSpec::identity(contiguous_blocks(1, 1)));
    spec.student_nu = 8.0;
    const Matrix x = sample_design(spec, 777);
    const double scale_back = std::sqrt(static_cast<double>(draws));
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
      const double v = x(i, 0) * scale_back;  // undo the 1/sqrt(n)
      sum += v;
      sumsq += v * v;
    }
    const double mean = sum / static_cast<double>(draws);
    const double var = sumsq / static_cast<double>(draws) - mean * mean;
    CAPTURE(family_name(family));
    CHECK(var > 0.995);
    CHECK(var < 1.005);
    CHECK(std::fabs(mean) < 0.005);
  }
}

TEST_CASE("rademacher 1x1 entries are exactly +-1") {
  const auto spec = basic_spec(1, 1, EntryFamily::rademacher,
                               CovarianceSpec::identity(contiguous_blocks(1, 1)));
  for (int s = 0; s < 64; ++s) {
    const double v = sample_design(spec, s)(0, 0);
    CHECK((v == 1.0 || v == -1.0));
  }
}

TEST_CASE("equicorrelated pair: empirical column correlation near rho") {
  const std::size_t n = 100000;
  const auto spec = basic_spec(
      n, 2, EntryFamily::gaussian,
      CovarianceSpec::equicorrelated(contiguous_blocks(2, 2), 0.5));
  const Matrix g = gaussian_analogue(spec, 7);
  double s00 = 0.0, s11 = 0.0, s01 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s00 += g(i, 0) * g(i, 0);
    s11 += g(i, 1) * g(i, 1);
    s01 += g(i, 0) * g(i, 1);
  }
  const double corr = s01 / std::sqrt(s00 * s11);
  CHECK(corr > 0.49);
  CHECK(corr < 0.51);
}

TEST_CASE("gaussian family and analogue agree in law (two-sample KS)") {
  const std::size_t n = 500, p = 200;  // 10^5 pooled entries per arm
  const auto spec = basic_spec(
      n, p, EntryFamily::gaussian,
      CovarianceSpec::equicorrelated(contiguous_blocks(p, 4), 0.3));
  const Matrix x = sample_design(spec, 11);
  const Matrix g = gaussian_analogue(spec, 11);
  CHECK(ks_statistic(x.data, g.data) <= 0.02);
}

TEST_CASE("moment report: zero matrix degenerate input") {
  const auto sigma =
      build_sigma(CovarianceSpec::equicorrelated(contiguous_blocks(4, 2), 0.5));
  Matrix zero(10, 4);
  const MomentReport report = empirical_moment_check(zero, sigma.sigma);
  CHECK(report.max_mean_abs == 0.0);
  CHECK(report.max_cov_dev == 1.0);  // largest Sigma entry
}

TEST_CASE("rademacher identity design: diagonal of n*cov is exactly one") {
  const std::size_t n = 64, p = 8;
  const auto spec = basic_spec(n, p, EntryFamily::rademacher,
                               CovarianceSpec::identity(contiguous_blocks(p, 1)));
  const Matrix x = sample_design(spec, 3);
  for (std::size_t j = 0; j < p; ++j) {
    double diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) diag += x(i, j) * x(i, j);
    CHECK(diag == doctest::Approx(1.0).epsilon(1e-14));  // sum_i X_ij^2 = n/n
  }
  const auto sigma = build_sigma(spec.covariance);
  const MomentReport report = empirical_moment_check(x, sigma.sigma);
  CHECK(report.max_cov_se_ratio < 5.0);
}

TEST_CASE("cross-block covariance vanishes at the 5-SE scale, n = 2000") {
  const std::size_t n = 2000, p = 64;
  const auto spec = basic_spec(
      n, p, EntryFamily::rademacher,
      CovarianceSpec::equicorrelated(contiguous_blocks(p, 4), 0.3));
  const Matrix x = sample_design(spec, 2024);
  const auto sigma = build_sigma(spec.covariance);
  const MomentReport report = empirical_moment_check(x, sigma.sigma);
  CHECK(report.max_cross_block_se_ratio < 5.0);
  CHECK(report.max_cov_se_ratio < 5.0);
}

TEST_CASE("student_t moment requirement is enforced against q*") {
  auto spec = basic_spec(4, 4, EntryFamily::student_t,
                         CovarianceSpec::identity(contiguous_blocks(4, 1)));
  spec.student_nu = 5.0;
  CHECK_THROWS_AS(validate(spec, 4), ValidationError);  // q* = 16 for qbar0=4
  CHECK_NOTHROW(validate(spec, 0));                     // q* = 4 for qbar0=0
  spec.allow_unsafe = true;
  CHECK_NOTHROW(validate(spec, 4));
  spec.allow_unsafe = false;
  spec.student_nu = 17.0;
  CHECK_NOTHROW(validate(spec, 4));
  CHECK(spec.tau() == 1.0);
}
