#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "blockdep/design.hpp"
#include "blockdep/distributions.hpp"
#include "blockdep/linalg.hpp"
#include "blockdep/losses.hpp"

namespace blockdep {

/// Ridge-penalized residual regression problem in the centered variable
/// w = theta - theta0:
///   H(w) = (1/n) sum_i loss((X w)_i - xi_i) + (lambda/2) ||w + theta0||^2,
/// optionally restricted to the box [-box_L, box_L]^p.
struct ProblemInstance {
  Matrix X;
  Vector Y;       // X theta0 + xi, exact by construction
  Vector theta0;
  Vector xi;
  double lambda = 0.0;
  LossKind loss;
  std::optional<double> box_L;
};

struct Solution {
  Vector w_hat;
  double objective = 0.0;
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// Objective recorded per outer iteration (non-increasing for the
  /// prox-gradient path).
  std::vector<double> objective_trace;
};

/// Draw (X, theta0, xi) on independent substreams of `seed` and assemble the
/// exact linear model Y = X theta0 + xi.
ProblemInstance synth_data(const DesignSpec& design, const Theta0Spec& theta0,
                           const NoiseSpec& noise, double lambda,
                           const LossKind& loss, std::uint64_t seed,
                           std::optional<double> box_L = std::nullopt);

double objective(const ProblemInstance& instance, const Vector& w);

/// Minimize H. Smooth losses run monotone accelerated prox-gradient with a
/// power-iteration step size; the absolute loss runs an ADMM splitting with
/// the exact per-sample prox (box + absolute falls back to the smoothing
/// homotopy). The certificate is ||grad H||_2 for smooth losses, the largest
/// coordinate-wise distance from 0 to the subdifferential for the absolute
/// loss, and the projected-gradient norm for boxed problems. converged
/// implies kkt_residual <= tol; otherwise the best iterate is returned.
Solution erm_solve(const ProblemInstance& instance, double tol = 1e-8,
                   std::size_t max_iter = 50000);

/// Cross-check path for the absolute loss: minimize the C^3-smoothed
/// objective over a decreasing smoothing sequence ending at rho_final.
Solution erm_solve_homotopy(const ProblemInstance& instance, double rho_final,
                            double tol = 1e-8, std::size_t max_iter = 50000);

/// Soft minimum -(1/beta) log sum_j exp(-beta x_j) by max-shifted summation.
/// Sandwich: min(x) - log(N)/beta <= soft_min <= min(x).
double soft_min(std::span<const double> values, double beta);

/// delta Z^p intersected with [-L, L]^p, enumerated lexicographically.
/// Throws when the exact grid size would exceed 10^7 points (the message
/// carries the estimate) or when p > 8.
std::vector<Vector> discretize_box(double L, double delta, std::size_t p);

/// Exact number of grid points discretize_box would return.
unsigned __int128 discretize_box_size(double L, double delta, std::size_t p);

}  // namespace blockdep
