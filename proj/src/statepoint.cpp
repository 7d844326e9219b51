#include "blockdep/statepoint.hpp"

#include <cmath>

#include "blockdep/errors.hpp"

namespace blockdep {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr double kSqrtPi = 1.7724538509055160;

double phi(double x) {
  if (!std::isfinite(x)) return 0.0;
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double Phi(double x) { return 0.5 * std::erfc(-x * 0.7071067811865476); }

/// Gaussian moments on an interval: I0 = P(a < Z < b), I1 = E[Z 1], I2 = E[Z^2 1].
struct IntervalMoments {
  double i0, i1, i2;
};

IntervalMoments interval_moments(double a, double b) {
  const double pa = phi(a), pb = phi(b);
  const double i0 = Phi(b) - Phi(a);
  const double i1 = pa - pb;
  const double bpb = std::isfinite(b) ? b * pb : 0.0;
  const double apa = std::isfinite(a) ? a * pa : 0.0;
  return {i0, i1, i0 - (bpb - apa)};
}

/// Closed-form Z-integrals conditional on xi = c.
struct Conditional {
  double residual_sq;
  double residual_raw;
  double prox_deriv;
};

Conditional conditional_given_xi(const LossKind& loss, double gamma,
                                 double beta, double c) {
  switch (loss.kind) {
    case LossKind::Kind::squared: {
      const double shrink = 2.0 * beta / (1.0 + 2.0 * beta);
      const double ev2 = gamma * gamma + c * c;
      return {shrink * shrink * ev2, shrink * c, 1.0 / (1.0 + 2.0 * beta)};
    }
    case LossKind::Kind::absolute: {
      const double t = beta;
      const double a = (-t - c) / gamma;
      const double b = (t - c) / gamma;
      const IntervalMoments m = interval_moments(a, b);
      const double p_lo = Phi(a);
      const double p_hi = 1.0 - Phi(b);
      // v = gamma Z + c on the interval
      const double ev1 = gamma * m.i1 + c * m.i0;
      const double ev2 =
          gamma * gamma * m.i2 + 2.0 * gamma * c * m.i1 + c * c * m.i0;
      return {ev2 + t * t * (p_lo + p_hi), ev1 + t * (p_hi - p_lo),
              p_lo + p_hi};
    }
    case LossKind::Kind::huber: {
      const double t = loss.eta * (1.0 + beta);
      const double shrink = beta / (1.0 + beta);
      const double jump = beta * loss.eta;
      const double a = (-t - c) / gamma;
      const double b = (t - c) / gamma;
      const IntervalMoments m = interval_moments(a, b);
      const double p_lo = Phi(a);
      const double p_hi = 1.0 - Phi(b);
      const double ev1 = gamma * m.i1 + c * m.i0;
      const double ev2 =
          gamma * gamma * m.i2 + 2.0 * gamma * c * m.i1 + c * c * m.i0;
      return {shrink * shrink * ev2 + jump * jump * (p_lo + p_hi),
              shrink * ev1 + jump * (p_hi - p_lo),
              m.i0 / (1.0 + beta) + (p_lo + p_hi)};
    }
  }
  return {0.0, 0.0, 0.0};
}

/// Discretized xi-law with weights summing to 1.
struct XiRule {
  std::vector<double> points;
  std::vector<double> weights;
};

XiRule xi_rule(const StateEvolutionInput& input) {
  XiRule rule;
  switch (input.noise.kind) {
    case NoiseSpec::Kind::gaussian: {
      if (input.noise.sigma2 == 0.0) {
        rule.points = {0.0};
        rule.weights = {1.0};
        return rule;
      }
      const GaussHermite gh = gauss_hermite(input.quad_nodes);
      const double s = std::sqrt(2.0 * input.noise.sigma2);
      rule.points.reserve(gh.nodes.size());
      rule.weights.reserve(gh.nodes.size());
      for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
        rule.points.push_back(s * gh.nodes[i]);
        rule.weights.push_back(gh.weights[i] / kSqrtPi);
      }
      return rule;
    }
    case NoiseSpec::Kind::two_point: {
      if (input.noise.a == 0.0) {
        rule.points = {0.0};
        rule.weights = {1.0};
      } else {
        rule.points = {input.noise.a, -input.noise.a};
        rule.weights = {0.5, 0.5};
      }
      return rule;
    }
    case NoiseSpec::Kind::student_t: {
      Rng rng(input.mc_seed);
      rule.points.resize(input.mc_samples);
      const double w = 1.0 / static_cast<double>(input.mc_samples);
      rule.weights.assign(input.mc_samples, w);
      for (auto& v : rule.points) v = rng.student_t(input.noise.nu);
      return rule;
    }
  }
  throw ValidationError("state evolution: unsupported noise law");
}

enum class Which { residual_sq, residual_raw, prox_deriv };

double integrate(Which which, double gamma, double beta,
                 const StateEvolutionInput& input) {
  input.check();
  if (!(gamma > 0.0 && beta > 0.0))
    throw ValidationError("state evolution expectations need gamma, beta > 0");
  const XiRule rule = xi_rule(input);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.points.size(); ++i) {
    const Conditional c =
        conditional_given_xi(input.loss, gamma, beta, rule.points[i]);
    const double v = which == Which::residual_sq
                         ? c.residual_sq
                         : (which == Which::residual_raw ? c.residual_raw
                                                         : c.prox_deriv);
    acc += rule.weights[i] * v;
  }
  return acc;
}

double integrate_z_quadrature(Which which, double gamma, double beta,
                              const StateEvolutionInput& input, int z_nodes) {
  input.check();
  const XiRule rule = xi_rule(input);
  const GaussHermite gh = gauss_hermite(z_nodes);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.points.size(); ++i) {
    const double c = rule.points[i];
    double inner = 0.0;
    for (std::size_t q = 0; q < gh.nodes.size(); ++q) {
      const double z = 1.4142135623730951 * gh.nodes[q];
      const double v = gamma * z + c;
      double val = 0.0;
      if (which == Which::prox_deriv) {
        val = prox_derivative(input.loss, v, beta).value;
      } else {
        const double res = v - prox(input.loss, v, beta);
        val = which == Which::residual_sq ? res * res : res;
      }
      inner += gh.weights[q] * val;
    }
    acc += rule.weights[i] * inner / kSqrtPi;
  }
  return acc;
}

struct Residuals {
  double eq1, eq2;
  double max_abs() const { return std::max(std::fabs(eq1), std::fabs(eq2)); }
};

Residuals residuals_at(double beta, double gamma,
                       const StateEvolutionInput& input) {
  const double e_sq = integrate(Which::residual_sq, gamma, beta, input);
  const double e_dp = integrate(Which::prox_deriv, gamma, beta, input);
  const double ridge = input.lambda * input.lambda * beta * beta *
                       input.pi0_second_moment;
  return {gamma * gamma / input.tau0 - e_sq - ridge,
          1.0 - 1.0 / input.tau0 + input.lambda * beta - e_dp};
}

constexpr double kFloorBeta = 1e-9;
constexpr double kFloorGamma = 1e-9;

struct SolveOutcome {
  double beta, gamma;
  bool converged;
  std::size_t iterations;
  std::vector<std::array<double, 5>> trace;
};

/// Solve eq2 for beta at fixed gamma by bisection. The left side grows
/// linearly in beta while E[prox'] is nonincreasing, so the root is unique.
double solve_beta_given_gamma(double gamma, const StateEvolutionInput& input) {
  const auto h = [&](double beta) {
    return 1.0 - 1.0 / input.tau0 + input.lambda * beta -
           integrate(Which::prox_deriv, gamma, beta, input);
  };
  double lo = kFloorBeta;
  if (h(lo) >= 0.0) return lo;
  double hi = 1.0;
  while (h(hi) < 0.0 && hi < 1e12) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (h(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

SolveOutcome solve_from(double beta, double gamma,
                        const StateEvolutionInput& input, double tol,
                        std::size_t max_iter, bool keep_trace) {
  SolveOutcome out{beta, gamma, false, 0, {}};
  for (std::size_t iter = 1; iter <= max_iter; ++iter) {
    out.iterations = iter;
    Residuals res = residuals_at(out.beta, out.gamma, input);
    if (keep_trace)
      out.trace.push_back(
          {static_cast<double>(iter), out.beta, out.gamma, res.eq1, res.eq2});
    if (res.max_abs() <= tol) {
      out.converged = true;
      return out;
    }

    // Newton finisher once the alternation is in the basin.
    if (res.max_abs() < 1e-2) {
      const double hb = 1e-5 * std::max(1.0, std::fabs(out.beta));
      const double hg = 1e-5 * std::max(1.0, std::fabs(out.gamma));
      const double bm = std::max(out.beta - hb, kFloorBeta);
      const double gm = std::max(out.gamma - hg, kFloorGamma);
      const Residuals rbp = residuals_at(out.beta + hb, out.gamma, input);
      const Residuals rbm = residuals_at(bm, out.gamma, input);
      const Residuals rgp = residuals_at(out.beta, out.gamma + hg, input);
      const Residuals rgm = residuals_at(out.beta, gm, input);
      const double dbm = out.beta + hb - bm;
      const double dgm = out.gamma + hg - gm;
      const double j11 = (rbp.eq1 - rbm.eq1) / dbm;
      const double j12 = (rgp.eq1 - rgm.eq1) / dgm;
      const double j21 = (rbp.eq2 - rbm.eq2) / dbm;
      const double j22 = (rgp.eq2 - rgm.eq2) / dgm;
      const double det = j11 * j22 - j12 * j21;
      if (det != 0.0 && std::isfinite(det)) {
        const double step_b = (res.eq1 * j22 - res.eq2 * j12) / det;
        const double step_g = (res.eq2 * j11 - res.eq1 * j21) / det;
        double scale = 1.0;
        bool accepted = false;
        for (int back = 0; back < 30; ++back) {
          const double nb = std::max(out.beta - scale * step_b, kFloorBeta);
          const double ng = std::max(out.gamma - scale * step_g, kFloorGamma);
          if (residuals_at(nb, ng, input).max_abs() < res.max_abs()) {
            out.beta = nb;
            out.gamma = ng;
            accepted = true;
            break;
          }
          scale *= 0.5;
        }
        if (accepted) continue;
      }
      // Newton rejected: fall through to the alternation step.
    }

    // Alternation: exact beta given gamma, damped gamma update.
    out.beta = solve_beta_given_gamma(out.gamma, input);
    const double e_sq =
        integrate(Which::residual_sq, out.gamma, out.beta, input);
    const double ridge = input.lambda * input.lambda * out.beta * out.beta *
                         input.pi0_second_moment;
    const double gamma_next =
        std::max(std::sqrt(input.tau0 * (e_sq + ridge)), kFloorGamma);
    out.gamma = 0.5 * out.gamma + 0.5 * gamma_next;
  }
  const Residuals res = residuals_at(out.beta, out.gamma, input);
  out.converged = res.max_abs() <= tol;
  return out;
}

}  // namespace

GaussHermite gauss_hermite(int n) {
  if (n < 1) throw ValidationError("gauss_hermite: need n >= 1");
  GaussHermite gh;
  gh.nodes.assign(n, 0.0);
  gh.weights.assign(n, 0.0);
  const double pim4 = 0.7511255444649425;  // pi^{-1/4}
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) -
          1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(n, 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * gh.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * gh.nodes[1];
    } else {
      z = 2.0 * z - gh.nodes[i - 2];
    }
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double dz = p1 / pp;
      z -= dz;
      if (std::fabs(dz) <= 1e-15 * std::max(1.0, std::fabs(z))) break;
    }
    gh.nodes[i] = z;
    gh.nodes[n - 1 - i] = -z;
    gh.weights[i] = 2.0 / (pp * pp);
    gh.weights[n - 1 - i] = gh.weights[i];
  }
  // midpoint of an odd rule sits exactly at zero
  if (n % 2 == 1) gh.nodes[m - 1] = 0.0;
  return gh;
}

void StateEvolutionInput::check() const {
  if (!(tau0 > 0.0)) throw ValidationError("state evolution: tau0 must be > 0");
  if (!(lambda > 0.0))
    throw ValidationError("state evolution: lambda must be > 0");
  if (pi0_second_moment < 0.0)
    throw ValidationError("state evolution: E[Pi0^2] must be >= 0");
  if (quad_nodes < 1)
    throw ValidationError("state evolution: quad_nodes must be >= 1");
  if (mc_samples < 2)
    throw ValidationError("state evolution: mc_samples must be >= 2");
  noise.check();
}

double expected_residual_sq(double gamma, double beta,
                            const StateEvolutionInput& input) {
  return integrate(Which::residual_sq, gamma, beta, input);
}

double expected_prox_derivative(double gamma, double beta,
                                const StateEvolutionInput& input) {
  return integrate(Which::prox_deriv, gamma, beta, input);
}

double expected_residual_raw(double gamma, double beta,
                             const StateEvolutionInput& input) {
  return integrate(Which::residual_raw, gamma, beta, input);
}

double expected_residual_sq_quadrature(double gamma, double beta,
                                       const StateEvolutionInput& input,
                                       int z_nodes) {
  return integrate_z_quadrature(Which::residual_sq, gamma, beta, input,
                                z_nodes);
}

double expected_prox_derivative_quadrature(double gamma, double beta,
                                           const StateEvolutionInput& input,
                                           int z_nodes) {
  return integrate_z_quadrature(Which::prox_deriv, gamma, beta, input,
                                z_nodes);
}

StateEvolutionSolution solve_state_evolution(const StateEvolutionInput& input,
                                             double tol,
                                             std::size_t max_iter) {
  input.check();
  if (!(tol > 0.0)) throw ValidationError("state evolution: tol must be > 0");

  const double scale_guess =
      std::sqrt(input.noise.second_moment() + input.pi0_second_moment);
  const double gamma0 = scale_guess > 0.0 ? scale_guess : 1.0;
  SolveOutcome main = solve_from(1.0, gamma0, input, tol, max_iter, true);

  StateEvolutionSolution sol;
  sol.trace = main.trace;
  sol.iterations = main.iterations;

  // Uniqueness is a claim, not an assumption: re-solve from random corners.
  Rng rng(0xB0075);
  double best_beta = main.beta, best_gamma = main.gamma;
  bool any = main.converged;
  for (int s = 0; s < 5; ++s) {
    const double b0 = 0.01 * std::pow(1000.0, rng.uniform01());
    const double g0 = 0.01 * std::pow(1000.0, rng.uniform01());
    const SolveOutcome alt = solve_from(b0, g0, input, tol, max_iter, false);
    if (!alt.converged) continue;
    if (!any) {
      best_beta = alt.beta;
      best_gamma = alt.gamma;
      any = true;
      continue;
    }
    const double db = std::fabs(alt.beta - best_beta) /
                      std::max(1.0, std::fabs(best_beta));
    const double dg = std::fabs(alt.gamma - best_gamma) /
                      std::max(1.0, std::fabs(best_gamma));
    if (db > 1e-6 || dg > 1e-6) sol.multistart_agreed = false;
  }
  if (!any)
    throw ConvergenceError(
        "state evolution: no start converged within max_iter");

  sol.beta_star = best_beta;
  sol.gamma_star = best_gamma;
  sol.converged = true;
  const Residuals res = residuals_at(best_beta, best_gamma, input);
  sol.eq1_residual = res.eq1;
  sol.eq2_residual = res.eq2;
  const double raw =
      integrate(Which::residual_raw, best_gamma, best_beta, input);
  sol.eq1_raw_residual = best_gamma * best_gamma / input.tau0 - raw -
                         input.lambda * input.lambda * best_beta * best_beta *
                             input.pi0_second_moment;
  sol.predicted_error = input.tau0 * best_gamma * best_gamma;
  return sol;
}

}  // namespace blockdep
