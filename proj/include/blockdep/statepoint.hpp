#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "blockdep/distributions.hpp"
#include "blockdep/losses.hpp"

namespace blockdep {

/// Physicists' Gauss-Hermite rule: integral of exp(-x^2) f(x) dx
/// ~ sum w_i f(x_i). Nodes by Newton iteration on the normalized recurrence.
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussHermite gauss_hermite(int n);

/// Inputs of the two-equation fixed-point system. tau0 = n/p.
struct StateEvolutionInput {
  double tau0 = 2.0;
  double lambda = 0.5;
  LossKind loss;
  NoiseSpec noise;
  double pi0_second_moment = 1.0;

  // Integration over xi: Gauss-Hermite node count for gaussian noise,
  // fixed-seed Monte Carlo size for student_t (two_point is summed exactly).
  int quad_nodes = 64;
  std::size_t mc_samples = 100000;
  std::uint64_t mc_seed = 0x51AD;

  void check() const;  // throws ValidationError
};

/// E[(v - prox(v; beta))^2], v = gamma Z + xi, Z ~ N(0,1).
///
/// The Z-integral is evaluated in closed form conditional on xi (Gaussian
/// tail and truncated-moment identities per loss), so the result is smooth
/// in (gamma, beta) even where prox' jumps; only the xi-law is quadrature.
double expected_residual_sq(double gamma, double beta,
                            const StateEvolutionInput& input);

/// E[prox'(gamma Z + xi; beta)], same integration scheme.
double expected_prox_derivative(double gamma, double beta,
                                const StateEvolutionInput& input);

/// E[v - prox(v; beta)] without the square: the literal form of the first
/// published equation. Vanishes for symmetric noise, which is why the
/// squared form is the one solved; both residuals are reported.
double expected_residual_raw(double gamma, double beta,
                             const StateEvolutionInput& input);

/// Reference route: tensor Gauss-Hermite over Z as well (z_nodes points).
/// Spectrally accurate for the squared loss only -- the nonsmooth losses put
/// an indicator in the integrand. Used as a cross-check.
double expected_residual_sq_quadrature(double gamma, double beta,
                                       const StateEvolutionInput& input,
                                       int z_nodes);
double expected_prox_derivative_quadrature(double gamma, double beta,
                                           const StateEvolutionInput& input,
                                           int z_nodes);

struct StateEvolutionSolution {
  double beta_star = 0.0;
  double gamma_star = 0.0;
  double eq1_residual = 0.0;      // squared-residual form (solved)
  double eq2_residual = 0.0;
  double eq1_raw_residual = 0.0;  // literal unsquared form, reported only
  std::size_t iterations = 0;
  bool converged = false;
  bool multistart_agreed = true;
  double predicted_error = 0.0;   // tau0 * gamma*^2
  // (iteration, beta, gamma, eq1 residual, eq2 residual)
  std::vector<std::array<double, 5>> trace;
};

/// Damped fixed-point iteration with a 2-D finite-difference Newton finish;
/// five extra random starts cross-check uniqueness. Throws ConvergenceError
/// when no start converges.
StateEvolutionSolution solve_state_evolution(const StateEvolutionInput& input,
                                             double tol = 1e-10,
                                             std::size_t max_iter = 300);

}  // namespace blockdep
