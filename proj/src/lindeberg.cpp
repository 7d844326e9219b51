#include "blockdep/lindeberg.hpp"

#include <cmath>

#include "blockdep/errors.hpp"

namespace blockdep {

void check_path(const SwapPath& path) {
  if (!path.X.same_shape(path.W))
    throw ValidationError("swap path: X and W shapes differ");
  if (path.partition.p != path.X.cols)
    throw ValidationError("swap path: partition does not cover p columns");
  const PartitionValidation report = validate(path.partition, path.partition.p);
  if (!report.invariants_ok)
    throw ValidationError("swap path: invalid partition: " +
                          report.first_violation);
}

Vector masked_row(const Vector& row, const std::vector<std::uint32_t>& cell) {
  Vector out(row.size(), 0.0);
  for (std::uint32_t idx : cell) {
    if (idx >= row.size())
      throw ValidationError("masked_row: index out of range");
    out[idx] = row[idx];
  }
  return out;
}

namespace {

void check_indices(const SwapPath& path, std::size_t i, std::size_t j,
                   std::size_t j_min) {
  const std::size_t k = path.partition.cells.size();
  if (i < 1 || i > path.X.rows)
    throw ValidationError("swap path: row index out of range");
  if (j < j_min || j > k)
    throw ValidationError("swap path: cell index out of range");
}

/// Rows 1..i-1 from X, rows i+1..n from W; row i starts as W_i.
Matrix hybrid_base(const SwapPath& path, std::size_t i) {
  Matrix z = path.W;
  for (std::size_t r = 0; r + 1 < i; ++r)
    for (std::size_t c = 0; c < z.cols; ++c) z(r, c) = path.X(r, c);
  return z;
}

}  // namespace

Matrix z_matrix(const SwapPath& path, std::size_t i, std::size_t j) {
  check_path(path);
  check_indices(path, i, j, 0);
  Matrix z = hybrid_base(path, i);
  const std::size_t row = i - 1;
  for (std::size_t cell = 0; cell < j; ++cell)
    for (std::uint32_t c : path.partition.cells[cell])
      z(row, c) = path.X(row, c);
  return z;
}

Matrix z0_matrix(const SwapPath& path, std::size_t i, std::size_t j) {
  check_path(path);
  check_indices(path, i, j, 1);
  Matrix z = z_matrix(path, i, j);
  const std::size_t row = i - 1;
  for (std::uint32_t c : path.partition.cells[j - 1]) z(row, c) = 0.0;
  return z;
}

double telescoping_check(const SwapPath& path,
                         const std::function<double(const Matrix&)>& f) {
  check_path(path);
  const std::size_t n = path.X.rows;
  const std::size_t k = path.partition.cells.size();
  double chain = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    double prev = f(z_matrix(path, i, 0));
    for (std::size_t j = 1; j <= k; ++j) {
      const double cur = f(z_matrix(path, i, j));
      chain += cur - prev;
      prev = cur;
    }
  }
  return std::fabs(f(path.X) - f(path.W) - chain);
}

GapEstimate mc_gap(const DesignSpec& design_a, const DesignSpec& design_b,
                   const std::function<double(const Matrix&)>& f,
                   std::size_t reps, std::uint64_t seed) {
  if (design_a.n != design_b.n || design_a.p != design_b.p)
    throw ValidationError("mc_gap: designs must share (n, p)");
  if (reps < 2) throw ValidationError("mc_gap: need at least 2 replications");

  GapEstimate est;
  est.reps = reps;
  double sum_d = 0.0, sumsq_d = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    const std::uint64_t rep_seed = Rng::stream(seed, r).next_u64();
    const double fa = f(sample_design(design_a, rep_seed));
    const double fb = f(sample_design(design_b, rep_seed));
    const double d = fa - fb;
    sum_d += d;
    sumsq_d += d * d;
    est.mean_a += fa;
    est.mean_b += fb;
  }
  const double dr = static_cast<double>(reps);
  est.mean_a /= dr;
  est.mean_b /= dr;
  est.gap = sum_d / dr;
  const double var = std::max(0.0, sumsq_d / dr - est.gap * est.gap);
  est.se = std::sqrt(var / (dr - 1.0));
  return est;
}

}  // namespace blockdep
