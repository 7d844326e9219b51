#include "blockdep/design.hpp"

#include <cmath>

#include "blockdep/errors.hpp"
#include "blockdep/kernels.hpp"
#include "blockdep/losses.hpp"

namespace blockdep {

namespace {

Matrix equicorrelated_block(std::size_t b, double rho) {
  Matrix block(b, b);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j) block(i, j) = i == j ? 1.0 : rho;
  return block;
}

Matrix block_for_cell(const CovarianceSpec& spec, std::size_t j) {
  const std::size_t b = spec.partition.cells[j].size();
  switch (spec.model) {
    case CovarianceSpec::Model::identity: {
      Matrix eye(b, b);
      for (std::size_t i = 0; i < b; ++i) eye(i, i) = 1.0;
      return eye;
    }
    case CovarianceSpec::Model::equicorrelated:
      return equicorrelated_block(b, spec.rho);
    case CovarianceSpec::Model::explicit_blocks: {
      if (j >= spec.blocks.size())
        throw ValidationError("covariance: missing explicit block " +
                              std::to_string(j + 1));
      const Matrix& block = spec.blocks[j];
      if (block.rows != b || block.cols != b)
        throw ValidationError("covariance: block " + std::to_string(j + 1) +
                              " shape does not match cell size");
      return block;
    }
  }
  throw ValidationError("covariance: unknown model");
}

void check_block_pd(const CovarianceSpec& spec, std::size_t j) {
  const std::size_t b = spec.partition.cells[j].size();
  if (spec.model == CovarianceSpec::Model::equicorrelated && b >= 2) {
    const double lo = -1.0 / static_cast<double>(b - 1);
    if (!(spec.rho > lo && spec.rho < 1.0))
      throw ValidationError("covariance: block " + std::to_string(j + 1) +
                            " of size " + std::to_string(b) +
                            " needs rho in (" + std::to_string(lo) + ", 1)");
  }
  Matrix chol = block_for_cell(spec, j);
  for (std::size_t r = 0; r < chol.rows; ++r)
    for (std::size_t c = r + 1; c < chol.cols; ++c)
      if (std::fabs(chol(r, c) - chol(c, r)) > 1e-12)
        throw ValidationError("covariance: block " + std::to_string(j + 1) +
                              " is not symmetric");
  if (!linalg::cholesky_in_place(chol))
    throw ValidationError("covariance: block " + std::to_string(j + 1) +
                          " is not positive definite");
}

/// Cholesky factor of a block, with a trace-scaled jitter retry for blocks
/// sitting numerically on the PD boundary.
Matrix block_cholesky(const CovarianceSpec& spec, std::size_t j) {
  Matrix block = block_for_cell(spec, j);
  Matrix chol = block;
  if (linalg::cholesky_in_place(chol)) return chol;
  double trace = 0.0;
  for (std::size_t i = 0; i < block.rows; ++i) trace += block(i, i);
  const double jitter = 1e-12 * trace / static_cast<double>(block.rows);
  for (std::size_t i = 0; i < block.rows; ++i) block(i, i) += jitter;
  if (!linalg::cholesky_in_place(block))
    throw ValidationError("covariance: block " + std::to_string(j + 1) +
                          " is not positive definite");
  return block;
}

double draw_entry(Rng& rng, EntryFamily family, double nu) {
  switch (family) {
    case EntryFamily::gaussian:
      return rng.normal();
    case EntryFamily::rademacher:
      return rng.rademacher();
    case EntryFamily::uniform:
      return rng.uniform_centered();
    case EntryFamily::centered_exponential:
      return rng.exponential_centered();
    case EntryFamily::student_t:
      return rng.student_t_unit(nu);
  }
  return 0.0;
}

Matrix sample_with_family(const DesignSpec& spec, EntryFamily family,
                          std::uint64_t seed, std::uint64_t domain) {
  validate(spec);
  const auto& cells = spec.covariance.partition.cells;
  std::vector<Matrix> chol(cells.size());
  std::vector<bool> trivial(cells.size());
  for (std::size_t j = 0; j < cells.size(); ++j) {
    trivial[j] =
        spec.covariance.model == CovarianceSpec::Model::identity || cells[j].size() == 1;
    if (trivial[j] && spec.covariance.model != CovarianceSpec::Model::identity) {
      // size-1 cell: factor is sqrt of the 1x1 block
      Matrix b = block_for_cell(spec.covariance, j);
      if (!(b(0, 0) > 0.0))
        throw ValidationError("covariance: block " + std::to_string(j + 1) +
                              " is not positive definite");
      Matrix f(1, 1);
      f(0, 0) = std::sqrt(b(0, 0));
      chol[j] = std::move(f);
      trivial[j] = false;
    } else if (!trivial[j]) {
      chol[j] = block_cholesky(spec.covariance, j);
    }
  }

  const double scale = spec.entry_scale / std::sqrt(static_cast<double>(spec.n));
  Matrix x(spec.n, spec.p);
  Rng rng = Rng::stream(seed, domain);
  Vector eps, mixed;
  for (std::size_t i = 0; i < spec.n; ++i) {
    double* row = x.row(i);
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const auto& cell = cells[j];
      const std::size_t b = cell.size();
      eps.resize(b);
      for (std::size_t t = 0; t < b; ++t)
        eps[t] = draw_entry(rng, family, spec.student_nu);
      if (trivial[j]) {
        for (std::size_t t = 0; t < b; ++t) row[cell[t]] = eps[t] * scale;
      } else {
        const Matrix& l = chol[j];
        mixed.assign(b, 0.0);
        for (std::size_t r = 0; r < b; ++r)
          mixed[r] = kernels::active().dot(l.row(r), eps.data(), r + 1);
        for (std::size_t t = 0; t < b; ++t) row[cell[t]] = mixed[t] * scale;
      }
    }
  }
  return x;
}

}  // namespace

SigmaResult build_sigma(const CovarianceSpec& spec) {
  const PartitionValidation report = validate(spec.partition, spec.partition.p);
  if (!report.invariants_ok)
    throw ValidationError("covariance: invalid partition: " +
                          report.first_violation);
  const std::size_t p = spec.partition.p;
  SigmaResult out;
  out.sigma = Matrix(p, p);
  for (std::size_t j = 0; j < spec.partition.cells.size(); ++j) {
    check_block_pd(spec, j);
    const Matrix block = block_for_cell(spec, j);
    const auto& cell = spec.partition.cells[j];
    for (std::size_t r = 0; r < cell.size(); ++r)
      for (std::size_t c = 0; c < cell.size(); ++c)
        out.sigma(cell[r], cell[c]) = block(r, c);
  }
  // Sigma is block-diagonal up to permutation, so the top eigenvalue is the
  // max over blocks; iterate per block rather than on the dense matrix.
  double lam = 0.0;
  for (std::size_t j = 0; j < spec.partition.cells.size(); ++j) {
    const Matrix block = block_for_cell(spec, j);
    lam = std::max(lam, linalg::power_iteration_max_eig(block));
  }
  out.lambda_max = lam;
  return out;
}

std::string family_name(EntryFamily family) {
  switch (family) {
    case EntryFamily::gaussian:
      return "gaussian";
    case EntryFamily::rademacher:
      return "rademacher";
    case EntryFamily::uniform:
      return "uniform";
    case EntryFamily::centered_exponential:
      return "centered_exponential";
    case EntryFamily::student_t:
      return "student_t";
  }
  return "?";
}

double DesignSpec::tau() const {
  const double ratio = static_cast<double>(p) / static_cast<double>(n);
  return std::min(ratio, 1.0 / ratio);
}

void validate(const DesignSpec& spec, int qbar0) {
  if (spec.n == 0 || spec.p == 0)
    throw ValidationError("design: n and p must be positive");
  if (spec.covariance.partition.p != spec.p)
    throw ValidationError("design: partition covers " +
                          std::to_string(spec.covariance.partition.p) +
                          " coordinates, p = " + std::to_string(spec.p));
  const PartitionValidation report =
      validate(spec.covariance.partition, spec.covariance.partition.p);
  if (!report.invariants_ok)
    throw ValidationError("design: invalid partition: " + report.first_violation);
  if (!(spec.entry_scale > 0.0))
    throw ValidationError("design: entry_scale must be positive");
  if (spec.family == EntryFamily::student_t) {
    if (!(spec.student_nu > 2.0))
      throw ValidationError("design: student_t needs nu > 2");
    if (qbar0 >= 0 && !spec.allow_unsafe) {
      const double qs = q_star(qbar0);
      if (!(spec.student_nu > qs))
        throw ValidationError(
            "design: student_t nu = " + std::to_string(spec.student_nu) +
            " fails the moment requirement nu > q* = " + std::to_string(qs) +
            " (set allow_unsafe to explore anyway)");
    }
  }
  for (std::size_t j = 0; j < spec.covariance.partition.cells.size(); ++j)
    check_block_pd(spec.covariance, j);
}

Matrix sample_design(const DesignSpec& spec, std::uint64_t seed) {
  return sample_with_family(spec, spec.family, seed, design_streams::kDesign);
}

Matrix gaussian_analogue(const DesignSpec& spec, std::uint64_t seed) {
  // The analogue realizes the declared Sigma exactly; entry_scale applies to
  // the non-Gaussian arm only, so a scale != 1 is a deliberate moment
  // mismatch between the two arms.
  DesignSpec declared = spec;
  declared.entry_scale = 1.0;
  return sample_with_family(declared, EntryFamily::gaussian, seed,
                            design_streams::kGaussian);
}

MomentReport empirical_moment_check(const Matrix& x, const Matrix& sigma) {
  if (sigma.rows != sigma.cols || sigma.rows != x.cols)
    throw ValidationError("moment check: shape mismatch");
  const std::size_t n = x.rows, p = x.cols;
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  // Column-major copy of X0 = sqrt(n) * X so column pairs are contiguous.
  Matrix cols(p, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.row(i);
    for (std::size_t j = 0; j < p; ++j) cols(j, i) = row[j] * sqrt_n;
  }

  MomentReport report;
  const auto& k = kernels::active();
  const double dn = static_cast<double>(n);
  for (std::size_t j = 0; j < p; ++j) {
    const double mean = k.sum(cols.row(j), n) / dn;
    const double var =
        std::max(0.0, k.sumsq(cols.row(j), n) / dn - mean * mean);
    const double se = std::sqrt(var / dn);
    const double dev = std::fabs(mean) / sqrt_n;  // column mean of X itself
    const double ratio = dev == 0.0 ? 0.0 : (se == 0.0 ? HUGE_VAL : dev / (se / sqrt_n));
    report.max_mean_abs = std::max(report.max_mean_abs, dev);
    report.max_mean_se_ratio = std::max(report.max_mean_se_ratio, ratio);
  }

  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t l = j; l < p; ++l) {
      double s = 0.0, sq = 0.0;
      k.dot_and_sq(cols.row(j), cols.row(l), n, &s, &sq);
      const double mean = s / dn;  // estimates Sigma_{jl}
      const double var = std::max(0.0, sq / dn - mean * mean);
      const double se = std::sqrt(var / dn);
      const double dev = std::fabs(mean - sigma(j, l));
      const double ratio = dev == 0.0 ? 0.0 : (se == 0.0 ? HUGE_VAL : dev / se);
      if (dev > report.max_cov_dev) {
        report.max_cov_dev = dev;
        report.cov_se_at_max = se;
      }
      report.max_cov_se_ratio = std::max(report.max_cov_se_ratio, ratio);
      if (sigma(j, l) == 0.0 && j != l) {
        report.max_cross_block_dev = std::max(report.max_cross_block_dev, dev);
        report.max_cross_block_se_ratio =
            std::max(report.max_cross_block_se_ratio, ratio);
      }
    }
  }
  return report;
}

}  // namespace blockdep
