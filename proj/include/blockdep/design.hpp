#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blockdep/linalg.hpp"
#include "blockdep/partition.hpp"
#include "blockdep/rng.hpp"

namespace blockdep {

/// Covariance of the unscaled covariate vector X0: block-diagonal with
/// respect to the partition (cross-cell coordinates are independent, so
/// their covariance is forced to zero).
struct CovarianceSpec {
  enum class Model { identity, equicorrelated, explicit_blocks };

  Partition partition;
  Model model = Model::identity;
  double rho = 0.0;             // equicorrelated only
  std::vector<Matrix> blocks;   // explicit only, one per cell, cell-sized

  static CovarianceSpec identity(Partition p) {
    return {std::move(p), Model::identity, 0.0, {}};
  }
  static CovarianceSpec equicorrelated(Partition p, double rho) {
    return {std::move(p), Model::equicorrelated, rho, {}};
  }
};

struct SigmaResult {
  Matrix sigma;       // p x p, entries only within cells
  double lambda_max;  // power-iteration estimate
};

/// Assemble the dense Sigma and its largest eigenvalue. Throws
/// ValidationError naming the offending block when a block is not PD (for
/// equicorrelated: rho outside (-1/(b-1), 1) for some block of size b >= 2).
SigmaResult build_sigma(const CovarianceSpec& spec);

enum class EntryFamily {
  gaussian,
  rademacher,
  uniform,
  centered_exponential,
  student_t,
};

std::string family_name(EntryFamily family);

/// Row-i.i.d. design: within each cell the standardized entries are mixed by
/// the block Cholesky factor, across cells they are independent, and the
/// whole matrix is scaled by 1/sqrt(n).
struct DesignSpec {
  std::size_t n = 0;
  std::size_t p = 0;
  CovarianceSpec covariance;
  EntryFamily family = EntryFamily::gaussian;
  double student_nu = 0.0;   // student_t only
  bool allow_unsafe = false; // skip the nu > q* moment check
  double entry_scale = 1.0;  // multiplies X0 entries (mismatch experiments)

  /// Assumption-1 aspect ratio tau = min(p/n, n/p).
  double tau() const;
};

/// Validates shapes, the covariance blocks, and (given the loss profile's
/// qbar0) the student-t moment requirement nu > q* = 2^{(qbar0+4)/2}.
/// Pass qbar0 < 0 to skip the moment check. Throws ValidationError.
void validate(const DesignSpec& spec, int qbar0 = -1);

/// Sample the n x p design X = X0 / sqrt(n). Deterministic in (spec, seed).
Matrix sample_design(const DesignSpec& spec, std::uint64_t seed);

/// Gaussian twin with the same Sigma, drawn from a stream independent of
/// sample_design's for the same seed.
Matrix gaussian_analogue(const DesignSpec& spec, std::uint64_t seed);

/// Moment-matching report: column means and the deviation of n * (uncentered
/// sample covariance) from Sigma, each with a data-driven standard-error
/// scale. se ratios are |deviation| / se, with 0/0 counted as 0.
struct MomentReport {
  double max_mean_abs = 0.0;
  double max_mean_se_ratio = 0.0;
  double max_cov_dev = 0.0;
  double cov_se_at_max = 0.0;
  double max_cov_se_ratio = 0.0;
  double max_cross_block_dev = 0.0;   // entries with Sigma == 0 outside cells
  double max_cross_block_se_ratio = 0.0;
};

MomentReport empirical_moment_check(const Matrix& x, const Matrix& sigma);

/// Internal sampling stream tags, exposed so the harness can share the
/// replication-level substreams.
namespace design_streams {
inline constexpr std::uint64_t kDesign = 0x586d6174726978ULL;    // "Xmatrix"
inline constexpr std::uint64_t kGaussian = 0x476d6174726978ULL;  // "Gmatrix"
}  // namespace design_streams

}  // namespace blockdep
