#pragma once

#include <cstdint>
#include <vector>

#include "blockdep/design.hpp"
#include "blockdep/distributions.hpp"
#include "blockdep/losses.hpp"
#include "blockdep/solver.hpp"
#include "blockdep/statepoint.hpp"

namespace blockdep {

/// sigma_n = p d^{3 + qbar0/2} / n^{5/2} + p d^2 / n^{3/2}
///         + p d^{qbar0 + 2} / n^{(qbar0 + 3)/2}
double rate_sigma_n(double n, double p, double d, double qbar0);

/// omega_n = n^{-(q0 q1 + 3)/2} * sigma_n
double rate_omega_n(double n, double sigma_n, double q0, double q1);

struct RateReport {
  double sigma_n = 0.0;
  double omega_n = 0.0;
  double n = 0.0, p = 0.0, d = 0.0;
  double qbar0 = 0.0, q0 = 0.0, q1 = 0.0;
};

RateReport rate_report(double n, double p, double d, double qbar0, double q0,
                       double q1);

/// Admissible dependence order: d = o(n^exponent / log^log_power n) with
/// exponent = 1/4 - (qbar0 + 3) alpha / 2 and log_power = 6 + (2 qbar0 + 6) kappa.
/// alpha must lie in [0, 1/(2 qbar0 + 6)], kappa >= 0.
struct AdmissibleD {
  double exponent = 0.0;
  double log_power = 0.0;
  double threshold_at_n = 0.0;  // n^exponent / log^log_power n, convenience
};

AdmissibleD admissible_d(double n, double alpha, double kappa, double qbar0);

/// Two-sample Kolmogorov-Smirnov statistic (sorted-merge sup-CDF distance).
double ks_statistic(std::vector<double> a, std::vector<double> b);

/// One universality experiment: per replication, shared (theta0, xi) and
/// independent X / Gaussian-analogue draws, both ERM problems solved.
struct ExperimentConfig {
  DesignSpec design;
  LossKind loss;
  double lambda = 0.5;
  Theta0Spec theta0;
  NoiseSpec noise;
  std::size_t replications = 2;
  std::uint64_t master_seed = 1;
  double tol = 1e-8;
  std::size_t max_iter = 50000;
  /// Replications are dropped when a solver fails; beyond this fraction the
  /// whole run is rejected.
  double max_excluded_fraction = 0.02;

  void check() const;  // throws ValidationError
};

struct UniversalityResult {
  std::vector<double> min_obj_x, min_obj_g;  // realized minima per replication
  std::vector<double> err_x, err_g;          // p^{-1} ||theta_hat - theta0||^2
  std::vector<double> winf_x, winf_g;        // ||w_hat||_inf diagnostics
  double mean_abs_coord_x = 0.0;             // max_j mean_r |w_hat_{r,j}|
  double mean_abs_coord_g = 0.0;
  std::size_t excluded = 0;
  double ks = 0.0;                 // KS between the two min-objective samples
  double mean_gap = 0.0;           // mean of paired min-objective differences
  double mean_gap_se = 0.0;        // jackknife SE
  double var_gap = 0.0;            // Var_x - Var_g of the minima
  double var_gap_se = 0.0;         // jackknife SE
};

UniversalityResult run_universality(const ExperimentConfig& config);

/// Estimation-error convergence against the state-evolution prediction.
/// lambda in the config is the fixed-point system's coefficient, i.e. the
/// ridge weight of the unnormalized objective sum_i loss + (lambda/2)
/// ||w+theta0||^2; the replications solve the equivalent (1/n)-normalized
/// problem with ridge coefficient lambda/n (same argmin).
struct ConvergenceReport {
  double mean_err = 0.0;
  double se_err = 0.0;
  double predicted = 0.0;  // tau0 * gamma*^2
  double rel_gap = 0.0;    // |mean - predicted| / predicted
  std::size_t excluded = 0;
  std::vector<double> per_rep_err;
  StateEvolutionSolution state;
};

ConvergenceReport run_error_convergence(const ExperimentConfig& config,
                                        const StateEvolutionInput& se_input);

/// Worker count: min(BLOCKDEP_THREADS, hardware concurrency), at least 1.
std::size_t worker_threads();

/// Jackknife standard error of a statistic of a sample.
double jackknife_se(const std::vector<double>& sample,
                    double (*statistic)(const std::vector<double>&));

}  // namespace blockdep
