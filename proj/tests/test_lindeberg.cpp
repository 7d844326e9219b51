#include <doctest.h>

#include <cmath>

#include "blockdep/errors.hpp"
#include "blockdep/lindeberg.hpp"
#include "blockdep/solver.hpp"
#include "oracles.hpp"

using namespace blockdep;

namespace {

Partition make_partition(std::size_t p,
                         std::vector<std::vector<std::uint32_t>> cells0) {
  Partition partition;
  partition.p = p;
  partition.cells = std::move(cells0);
  return partition;
}

SwapPath random_path(std::size_t n, std::size_t p, std::size_t max_cell,
                     Rng& rng) {
  SwapPath path;
  path.partition = oracles::random_partition(p, max_cell, rng);
  path.X = Matrix(n, p);
  path.W = Matrix(n, p);
  for (auto& v : path.X.data) v = rng.normal();
  for (auto& v : path.W.data) v = rng.uniform_centered();
  return path;
}

double frob_sq(const Matrix& m) {
  double acc = 0.0;
  for (double v : m.data) acc += v * v;
  return acc;
}

double entry_sum(const Matrix& m) {
  double acc = 0.0;
  for (double v : m.data) acc += v;
  return acc;
}

}  // namespace

TEST_CASE("masked_row") {
  const Vector row = {1.0, 2.0, 3.0};
  CHECK(masked_row(row, {0, 1, 2}) == row);
  CHECK(masked_row(row, {}) == Vector{0.0, 0.0, 0.0});
  CHECK(masked_row(row, {1}) == Vector{0.0, 2.0, 0.0});
}

TEST_CASE("z-matrix hand constructions (n=1, p=2, singleton cells)") {
  SwapPath path;
  path.partition = make_partition(2, {{0}, {1}});
  path.X = Matrix(1, 2);
  path.X(0, 0) = 1.0;
  path.X(0, 1) = 2.0;
  path.W = Matrix(1, 2);
  path.W(0, 0) = 10.0;
  path.W(0, 1) = 20.0;

  const Matrix z01 = z_matrix(path, 1, 1);
  CHECK(z01(0, 0) == 1.0);
  CHECK(z01(0, 1) == 20.0);

  const Matrix z0 = z0_matrix(path, 1, 2);
  CHECK(z0(0, 0) == 1.0);
  CHECK(z0(0, 1) == 0.0);

  CHECK(z_matrix(path, 1, 0).data == path.W.data);  // path start
  CHECK(z_matrix(path, 1, 2).data == path.X.data);  // path end (n=1)

  CHECK_THROWS_AS(z_matrix(path, 2, 0), ValidationError);
  CHECK_THROWS_AS(z_matrix(path, 1, 3), ValidationError);
  CHECK_THROWS_AS(z0_matrix(path, 1, 0), ValidationError);
}

TEST_CASE("z0 identity relations hold exactly on random paths") {
  Rng rng(314);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 1 + rng.next_u64() % 5;
    const std::size_t p = 1 + rng.next_u64() % 6;
    const SwapPath path = random_path(n, p, 3, rng);
    const std::size_t k = path.partition.cells.size();
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = 1; j <= k; ++j) {
        const Matrix z = z_matrix(path, i, j);
        const Matrix z_prev = z_matrix(path, i, j - 1);
        const Matrix z0 = z0_matrix(path, i, j);
        Matrix with_x = z0, with_w = z0;
        for (std::uint32_t c : path.partition.cells[j - 1]) {
          with_x(i - 1, c) += path.X(i - 1, c);
          with_w(i - 1, c) += path.W(i - 1, c);
        }
        CHECK(with_x.data == z.data);       // z0 + X-cell = z(i, j)
        CHECK(with_w.data == z_prev.data);  // z0 + W-cell = z(i, j-1)
      }
    }
  }
}

TEST_CASE("row-chain consistency: z(i, k) = z(i+1, 0), endpoints exact") {
  Rng rng(2714);
  const SwapPath path = random_path(4, 5, 2, rng);
  const std::size_t k = path.partition.cells.size();
  CHECK(z_matrix(path, 1, 0).data == path.W.data);
  CHECK(z_matrix(path, 4, k).data == path.X.data);
  for (std::size_t i = 1; i < 4; ++i)
    CHECK(z_matrix(path, i, k).data == z_matrix(path, i + 1, 0).data);
}

TEST_CASE("telescoping identity at machine precision") {
  SUBCASE("linear functional telescopes exactly") {
    Rng rng(99);
    const SwapPath path = random_path(3, 4, 2, rng);
    CHECK(telescoping_check(path, entry_sum) == 0.0);
  }
  SUBCASE("X == W gives residual zero") {
    Rng rng(100);
    SwapPath path = random_path(3, 4, 2, rng);
    path.W = path.X;
    CHECK(telescoping_check(path, frob_sq) == 0.0);
  }
  SUBCASE("quadratic, and soft-min of objectives, on 100 random paths") {
    Rng rng(101);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 2 + rng.next_u64() % 5;  // n, p <= 6
      const std::size_t p = 2 + rng.next_u64() % 5;
      const SwapPath path = random_path(n, p, 3, rng);

      const double scale_q =
          1.0 + std::fabs(frob_sq(path.X)) + std::fabs(frob_sq(path.W));
      CHECK(telescoping_check(path, frob_sq) <= 1e-10 * scale_q);

      // f = soft-min of the ridge objective over a tiny w-grid
      Vector theta0(p, 0.1), xi(n, 0.5);
      const auto f = [&](const Matrix& m) {
        ProblemInstance inst;
        inst.X = m;
        inst.theta0 = theta0;
        inst.xi = xi;
        linalg::gemv(inst.X, inst.theta0, inst.Y);
        for (std::size_t i = 0; i < inst.Y.size(); ++i) inst.Y[i] += inst.xi[i];
        inst.lambda = 0.5;
        inst.loss = LossKind::huber(1.0);
        std::vector<double> values;
        Vector w(p);
        for (double level : {-0.5, 0.0, 0.5}) {
          for (auto& v : w) v = level;
          values.push_back(objective(inst, w));
        }
        return soft_min(values, 2.0);
      };
      const double scale_f = 1.0 + std::fabs(f(path.X)) + std::fabs(f(path.W));
      CHECK(telescoping_check(path, f) <= 1e-10 * scale_f);
    }
  }
}

TEST_CASE("mc_gap: matched moments are invisible, third moments are not") {
  Partition two = make_partition(2, {{0}, {1}});
  DesignSpec rademacher;
  rademacher.n = 2;
  rademacher.p = 2;
  rademacher.covariance = CovarianceSpec::identity(two);
  rademacher.family = EntryFamily::rademacher;
  DesignSpec expo = rademacher;
  expo.family = EntryFamily::centered_exponential;
  DesignSpec gauss = rademacher;
  gauss.family = EntryFamily::gaussian;

  const auto entry = [](const Matrix& m) { return m(0, 0); };
  const auto entry2 = [](const Matrix& m) { return m(0, 0) * m(0, 0); };
  const auto entry3 = [](const Matrix& m) {
    return m(0, 0) * m(0, 0) * m(0, 0);
  };

  SUBCASE("same design twice: gap within 3 SE of zero") {
    const auto est = mc_gap(rademacher, rademacher, entry2, 4000, 5);
    CHECK(est.abs_gap() <= 3.0 * est.se + 1e-12);
  }
  SUBCASE("first and second moments match across families") {
    const auto m1 = mc_gap(rademacher, gauss, entry, 20000, 6);
    CHECK(m1.abs_gap() <= 3.0 * m1.se);
    const auto m2 = mc_gap(rademacher, gauss, entry2, 20000, 7);
    CHECK(m2.abs_gap() <= 3.0 * m2.se);
  }
  SUBCASE("positive control: exponential third moment is detected") {
    // E[(Exp(1)-1)^3] = 2, scaled by n^{-3/2} with n = 2; rademacher's vanishes
    const auto m3 = mc_gap(rademacher, expo, entry3, 20000, 8);
    CHECK(m3.abs_gap() > 3.0 * m3.se);
    CHECK(std::fabs(m3.abs_gap() - 2.0 / (2.0 * std::sqrt(2.0))) <
          5.0 * m3.se);
  }
  SUBCASE("mismatched shapes are rejected") {
    DesignSpec wide = rademacher;
    wide.p = 3;
    wide.covariance =
        CovarianceSpec::identity(make_partition(3, {{0}, {1}, {2}}));
    CHECK_THROWS_AS(mc_gap(rademacher, wide, entry, 10, 1), ValidationError);
  }
}
