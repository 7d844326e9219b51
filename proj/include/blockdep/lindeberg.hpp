#pragma once

#include <cstdint>
#include <functional>

#include "blockdep/design.hpp"
#include "blockdep/linalg.hpp"
#include "blockdep/partition.hpp"

namespace blockdep {

/// Pair of same-shape designs plus the dependence partition; the hybrid
/// matrices below interpolate between them one cell at a time.
struct SwapPath {
  Matrix X;
  Matrix W;
  Partition partition;
};

void check_path(const SwapPath& path);  // throws ValidationError

/// Entries inside the cell kept, all others zeroed.
Vector masked_row(const Vector& row, const std::vector<std::uint32_t>& cell);

/// Hybrid matrix: rows before i from X, rows after i from W, and row i equal
/// to W_i with cells 1..j replaced by X's values. i is 1-based in [1, n];
/// j counts swapped cells, 0 <= j <= k (j = 0 leaves row i all-W).
Matrix z_matrix(const SwapPath& path, std::size_t i, std::size_t j);

/// As z_matrix with cell j of row i carrying neither X nor W values
/// (1 <= j <= k). Satisfies, exactly:
///   z0(i,j) + masked_row(X_i, B_j) in row i == z(i, j)
///   z0(i,j) + masked_row(W_i, B_j) in row i == z(i, j-1)
Matrix z0_matrix(const SwapPath& path, std::size_t i, std::size_t j);

/// | f(X) - f(W) - sum_i sum_j (f(z(i,j)) - f(z(i,j-1))) |, which telescopes
/// to zero up to rounding.
double telescoping_check(const SwapPath& path,
                         const std::function<double(const Matrix&)>& f);

/// Paired-seed Monte Carlo estimate of E f(A) - E f(B).
struct GapEstimate {
  double gap = 0.0;       // mean of per-replication differences
  double se = 0.0;        // standard error of that mean
  double mean_a = 0.0;
  double mean_b = 0.0;
  std::size_t reps = 0;

  double abs_gap() const { return gap < 0.0 ? -gap : gap; }
};

GapEstimate mc_gap(const DesignSpec& design_a, const DesignSpec& design_b,
                   const std::function<double(const Matrix&)>& f,
                   std::size_t reps, std::uint64_t seed);

}  // namespace blockdep
