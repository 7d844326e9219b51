#include "blockdep/solver.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "blockdep/errors.hpp"
#include "blockdep/kernels.hpp"

namespace blockdep {

namespace {

constexpr std::uint64_t kTheta0Stream = 0x746865746130ULL;  // "theta0"
constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;     // "noise"

const kernels::Backend& k() { return kernels::active(); }

// Step-size bound only: a few percent of slack is fine (the 1.01 factor and
// the descent-lemma backtracking absorb any underestimate), so the iteration
// is kept short.
double lambda_max_xtx(const Matrix& x) {
  Vector tmp(x.rows);
  return linalg::power_iteration_max_eig(
      [&x, &tmp](const Vector& v, Vector& out) {
        linalg::gemv(x, v, tmp);
        linalg::gemv_t(x, tmp, out);
      },
      x.cols, /*max_iter=*/100, /*tol=*/1e-5);
}

void project_box(Vector& w, double box) {
  k().clamp(w.data(), -box, box, w.data(), w.size());
}

struct SmoothObjective {
  const ProblemInstance* inst;
  // nullopt -> exact loss (squared/huber); value -> rho-smoothed loss
  std::optional<double> rho;

  double value(const Vector& w, Vector& xw_scratch) const {
    linalg::gemv(inst->X, w, xw_scratch);
    const std::size_t n = inst->X.rows;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = xw_scratch[i] - inst->xi[i];
      acc += rho ? smoothed_loss(inst->loss, *rho, r)
                 : loss_value(inst->loss, r);
    }
    acc /= static_cast<double>(n);
    double ridge = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double t = w[j] + inst->theta0[j];
      ridge += t * t;
    }
    return acc + 0.5 * inst->lambda * ridge;
  }

  void gradient(const Vector& w, Vector& grad, Vector& xw_scratch,
                Vector& psi_scratch) const {
    linalg::gemv(inst->X, w, xw_scratch);
    const std::size_t n = inst->X.rows;
    psi_scratch.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = xw_scratch[i] - inst->xi[i];
      psi_scratch[i] = rho ? smoothed_loss_derivative(inst->loss, *rho, r)
                           : loss_derivative(inst->loss, r);
    }
    linalg::gemv_t(inst->X, psi_scratch, grad);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < w.size(); ++j)
      grad[j] = grad[j] * inv_n + inst->lambda * (w[j] + inst->theta0[j]);
  }
};

/// Monotone accelerated prox-gradient (projected when the box is present),
/// warm-startable. The recorded objective is non-increasing up to float-level
/// ties near the optimum.
Solution mfista(const ProblemInstance& inst, const SmoothObjective& obj,
                double curvature, double tol, std::size_t max_iter,
                const Vector* warm_start = nullptr) {
  const std::size_t p = inst.X.cols;
  const std::size_t n = inst.X.rows;
  double lip = curvature * lambda_max_xtx(inst.X) / static_cast<double>(n) +
               inst.lambda;
  lip = std::max(lip * 1.01, 1e-12);

  Solution sol;
  Vector x = warm_start ? *warm_start : Vector(p, 0.0);
  if (inst.box_L) project_box(x, *inst.box_L);
  Vector y = x, u(p), x_prev = x;
  Vector grad(p), xw(n), psi(n), diff(p);
  double t_momentum = 1.0;
  double fx = obj.value(x, xw);
  sol.objective_trace.push_back(fx);

  const auto kkt_norm = [&](const Vector& at) {
    obj.gradient(at, grad, xw, psi);
    if (!inst.box_L) return linalg::norm2(grad);
    // projected-gradient residual, reported on the gradient scale
    Vector step(p);
    for (std::size_t j = 0; j < p; ++j) step[j] = at[j] - grad[j] / lip;
    project_box(step, *inst.box_L);
    for (std::size_t j = 0; j < p; ++j) step[j] = (at[j] - step[j]) * lip;
    return linalg::norm2(step);
  };

  for (std::size_t iter = 1; iter <= max_iter; ++iter) {
    obj.gradient(y, grad, xw, psi);
    const double fy = obj.value(y, xw);
    double fu = 0.0;
    // descent-lemma safeguard against an underestimated step bound
    for (;;) {
      for (std::size_t j = 0; j < p; ++j) u[j] = y[j] - grad[j] / lip;
      if (inst.box_L) project_box(u, *inst.box_L);
      fu = obj.value(u, xw);
      k().sub(u.data(), y.data(), diff.data(), p);
      const double quad = fy + linalg::dot(grad, diff) +
                          0.5 * lip * linalg::dot(diff, diff);
      if (fu <= quad + 1e-12 * (1.0 + std::fabs(fu))) break;
      lip *= 2.0;
    }

    x_prev = x;
    // accept float-level ties, otherwise the iterate freezes once objective
    // improvements drop below double resolution and the KKT residual stalls
    if (fu <= fx + 64.0 * 2.220446049250313e-16 * (1.0 + std::fabs(fx))) {
      x = u;
      fx = fu;
    }  // else keep x: monotone step

    const double t_next =
        0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
    for (std::size_t j = 0; j < p; ++j)
      y[j] = x[j] + (t_momentum / t_next) * (u[j] - x[j]) +
             ((t_momentum - 1.0) / t_next) * (x[j] - x_prev[j]);
    t_momentum = t_next;
    sol.objective_trace.push_back(fx);
    sol.iterations = iter;

    if (iter % 8 == 0 || iter == max_iter) {
      const double res = kkt_norm(x);
      if (res <= tol) {
        sol.converged = true;
        sol.kkt_residual = res;
        break;
      }
    }
  }
  if (!sol.converged) sol.kkt_residual = kkt_norm(x);
  sol.w_hat = std::move(x);
  sol.objective = objective(inst, sol.w_hat);
  return sol;
}

/// Coordinate-wise distance from 0 to the subdifferential of the absolute-
/// loss objective at w; residuals within kink_tol count as kinks.
double absolute_kkt(const ProblemInstance& inst, const Vector& w,
                    double kink_tol) {
  const std::size_t n = inst.X.rows, p = inst.X.cols;
  Vector resid(n);
  linalg::gemv(inst.X, w, resid);
  for (std::size_t i = 0; i < n; ++i) resid[i] -= inst.xi[i];

  Vector g_det(p), slack(p, 0.0);
  for (std::size_t j = 0; j < p; ++j)
    g_det[j] = inst.lambda * (w[j] + inst.theta0[j]);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = inst.X.row(i);
    if (std::fabs(resid[i]) <= kink_tol) {
      for (std::size_t j = 0; j < p; ++j) slack[j] += std::fabs(row[j]) * inv_n;
    } else {
      k().axpy(inv_n * (resid[i] > 0.0 ? 1.0 : -1.0), row, g_det.data(), p);
    }
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < p; ++j)
    worst = std::max(worst, std::max(0.0, std::fabs(g_det[j]) - slack[j]));
  return worst;
}

Solution admm_absolute(const ProblemInstance& inst, double tol,
                       std::size_t max_iter) {
  const std::size_t n = inst.X.rows, p = inst.X.cols;

  // Column copy once so X^T X comes from contiguous dots.
  Matrix cols(p, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = inst.X.row(i);
    for (std::size_t j = 0; j < p; ++j) cols(j, i) = row[j];
  }
  Matrix xtx(p, p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t l = j; l < p; ++l) {
      const double v = k().dot(cols.row(j), cols.row(l), n);
      xtx(j, l) = v;
      xtx(l, j) = v;
    }

  double mu = std::max(inst.lambda, 1e-3);
  const auto factor = [&](double penalty) {
    Matrix m(p, p);
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t l = 0; l < p; ++l)
        m(j, l) = penalty * xtx(j, l) + (j == l ? inst.lambda : 0.0);
    if (!linalg::cholesky_in_place(m))
      throw ConvergenceError("erm_solve: ADMM normal matrix not PD");
    return m;
  };
  Matrix chol = factor(mu);

  Vector w(p, 0.0), r(n, 0.0), dual(n, 0.0), xw(n, 0.0);
  Vector rhs_n(n), rhs_p(p), r_prev(n), dual_change(p);
  Solution sol;
  const double xi_scale = 1.0 + linalg::norm_inf(inst.xi);
  int rebalances = 0;

  for (std::size_t iter = 1; iter <= max_iter; ++iter) {
    // w-step: (lambda I + mu X^T X) w = mu X^T (xi + r - dual) - lambda theta0
    for (std::size_t i = 0; i < n; ++i) rhs_n[i] = inst.xi[i] + r[i] - dual[i];
    linalg::gemv_t(inst.X, rhs_n, rhs_p);
    for (std::size_t j = 0; j < p; ++j)
      rhs_p[j] = mu * rhs_p[j] - inst.lambda * inst.theta0[j];
    w = linalg::cholesky_solve(chol, rhs_p);

    linalg::gemv(inst.X, w, xw);
    r_prev = r;
    for (std::size_t i = 0; i < n; ++i) rhs_n[i] = xw[i] - inst.xi[i] + dual[i];
    k().soft_threshold(rhs_n.data(), 1.0 / (static_cast<double>(n) * mu),
                       r.data(), n);
    for (std::size_t i = 0; i < n; ++i) dual[i] += xw[i] - inst.xi[i] - r[i];

    sol.objective_trace.push_back(objective(inst, w));
    sol.iterations = iter;

    if (iter % 10 == 0 || iter == max_iter) {
      double primal = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        primal = std::max(primal, std::fabs(xw[i] - inst.xi[i] - r[i]));
      for (std::size_t i = 0; i < n; ++i) rhs_n[i] = r[i] - r_prev[i];
      linalg::gemv_t(inst.X, rhs_n, dual_change);
      const double dual_res = mu * linalg::norm_inf(dual_change);

      const double kink_tol = std::max(2.0 * primal, 1e-12 * xi_scale);
      const double res = absolute_kkt(inst, w, kink_tol);
      if (res <= tol && primal <= std::max(tol, 1e-10) * xi_scale) {
        sol.converged = true;
        sol.kkt_residual = res;
        break;
      }
      if (iter % 50 == 0 && rebalances < 8) {
        if (primal > 10.0 * dual_res) {
          mu *= 2.0;
          for (auto& d : dual) d *= 0.5;
          chol = factor(mu);
          ++rebalances;
        } else if (dual_res > 10.0 * primal) {
          mu *= 0.5;
          for (auto& d : dual) d *= 2.0;
          chol = factor(mu);
          ++rebalances;
        }
      }
    }
  }
  if (!sol.converged) {
    double primal = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      primal = std::max(primal, std::fabs(xw[i] - inst.xi[i] - r[i]));
    sol.kkt_residual =
        absolute_kkt(inst, w, std::max(2.0 * primal, 1e-12 * xi_scale));
  }
  sol.w_hat = std::move(w);
  sol.objective = objective(inst, sol.w_hat);
  return sol;
}

void check_instance(const ProblemInstance& inst) {
  if (inst.X.rows != inst.Y.size() || inst.X.rows != inst.xi.size() ||
      inst.X.cols != inst.theta0.size())
    throw ValidationError("instance: shape mismatch");
  if (inst.lambda < 0.0) throw ValidationError("instance: lambda must be >= 0");
  if (inst.loss.kind != LossKind::Kind::squared && !(inst.lambda > 0.0))
    throw ValidationError(
        "instance: absolute/huber losses require lambda > 0 for a unique "
        "minimizer");
  if (inst.box_L && !(*inst.box_L >= 1.0))
    throw ValidationError("instance: box_L must be >= 1");
}

}  // namespace

ProblemInstance synth_data(const DesignSpec& design, const Theta0Spec& theta0,
                           const NoiseSpec& noise, double lambda,
                           const LossKind& loss, std::uint64_t seed,
                           std::optional<double> box_L) {
  noise.check();
  ProblemInstance inst;
  inst.X = sample_design(design, seed);
  Rng theta_rng = Rng::stream(seed, kTheta0Stream);
  inst.theta0 = theta0.draw(design.p, theta_rng);
  Rng noise_rng = Rng::stream(seed, kNoiseStream);
  inst.xi.resize(design.n);
  for (auto& v : inst.xi) v = noise.draw(noise_rng);
  linalg::gemv(inst.X, inst.theta0, inst.Y);
  for (std::size_t i = 0; i < design.n; ++i) inst.Y[i] += inst.xi[i];
  inst.lambda = lambda;
  inst.loss = loss;
  inst.box_L = box_L;
  check_instance(inst);
  return inst;
}

double objective(const ProblemInstance& inst, const Vector& w) {
  if (w.size() != inst.X.cols)
    throw ValidationError("objective: w has wrong length");
  Vector xw;
  SmoothObjective obj{&inst, std::nullopt};
  return obj.value(w, xw);
}

Solution erm_solve(const ProblemInstance& inst, double tol,
                   std::size_t max_iter) {
  check_instance(inst);
  if (!(tol > 0.0)) throw ValidationError("erm_solve: tol must be positive");
  switch (inst.loss.kind) {
    case LossKind::Kind::squared:
      return mfista(inst, SmoothObjective{&inst, std::nullopt}, 2.0, tol,
                    max_iter);
    case LossKind::Kind::huber:
      return mfista(inst, SmoothObjective{&inst, std::nullopt}, 1.0, tol,
                    max_iter);
    case LossKind::Kind::absolute:
      // Projection does not compose with the splitting updates, so boxed
      // absolute-loss problems run the smoothed path instead.
      if (inst.box_L) return erm_solve_homotopy(inst, 1e-9, tol, max_iter);
      return admm_absolute(inst, tol, max_iter);
  }
  throw ValidationError("erm_solve: unknown loss");
}

Solution erm_solve_homotopy(const ProblemInstance& inst, double rho_final,
                            double tol, std::size_t max_iter) {
  check_instance(inst);
  if (inst.loss.kind != LossKind::Kind::absolute)
    throw ValidationError("homotopy path is for the absolute loss");
  rho_final = std::min(std::max(rho_final, 1e-12), 0.5);

  Solution sol;
  Vector warm(inst.X.cols, 0.0);
  double rho = 0.5;
  std::size_t spent = 0;
  for (;;) {
    rho = std::max(rho, rho_final);
    // blend curvature peaks at 3.75/rho; factor 2 headroom
    const double curvature = 7.5 / rho;
    SmoothObjective obj{&inst, rho};
    const bool last = rho <= rho_final;
    const double stage_tol = last ? tol : std::max(tol, rho * 1e-2);
    const std::size_t budget = spent < max_iter ? max_iter - spent : 1;
    Solution stage = mfista(inst, obj, curvature, stage_tol, budget, &warm);
    warm = stage.w_hat;
    spent += stage.iterations;
    sol.objective_trace.insert(sol.objective_trace.end(),
                               stage.objective_trace.begin(),
                               stage.objective_trace.end());
    if (last || spent >= max_iter) {
      sol.w_hat = std::move(stage.w_hat);
      sol.converged = stage.converged && last;
      sol.kkt_residual = stage.kkt_residual;
      sol.iterations = spent;
      break;
    }
    rho *= 0.1;
  }
  sol.objective = objective(inst, sol.w_hat);
  return sol;
}

double soft_min(std::span<const double> values, double beta) {
  if (values.empty()) throw ValidationError("soft_min: empty input");
  if (!(beta > 0.0)) throw ValidationError("soft_min: beta must be positive");
  const double m = *std::min_element(values.begin(), values.end());
  double acc = 0.0;
  for (double v : values) acc += std::exp(-beta * (v - m));
  return m - std::log(acc) / beta;
}

unsigned __int128 discretize_box_size(double L, double delta, std::size_t p) {
  if (!(L >= 1.0)) throw ValidationError("discretize_box: L must be >= 1");
  if (!(delta > 0.0 && delta <= 1.0))
    throw ValidationError("discretize_box: delta must lie in (0, 1]");
  if (p < 1 || p > 8)
    throw ValidationError("discretize_box: p must lie in [1, 8]");
  const unsigned long long kmax =
      static_cast<unsigned long long>(std::floor(L / delta + 1e-9));
  const unsigned __int128 per_axis = 2 * kmax + 1;
  unsigned __int128 total = 1;
  const unsigned __int128 cap = static_cast<unsigned __int128>(1) << 100;
  for (std::size_t i = 0; i < p; ++i) {
    if (total > cap) return total;  // saturated; caller rejects anyway
    total *= per_axis;
  }
  return total;
}

std::vector<Vector> discretize_box(double L, double delta, std::size_t p) {
  const unsigned __int128 total = discretize_box_size(L, delta, p);
  if (total > 10000000)
    throw ValidationError("discretize_box: grid would hold " +
                          u128_to_string(total) + " points (> 1e7)");
  const long long kmax = static_cast<long long>(std::floor(L / delta + 1e-9));
  std::vector<Vector> points;
  points.reserve(static_cast<std::size_t>(total));
  std::vector<long long> idx(p, -kmax);
  for (;;) {
    Vector point(p);
    for (std::size_t j = 0; j < p; ++j)
      point[j] = static_cast<double>(idx[j]) * delta;
    points.push_back(std::move(point));
    // odometer increment, least-significant digit last
    std::size_t j = p;
    bool carried_past_front = true;
    while (j-- > 0) {
      if (++idx[j] <= kmax) {
        carried_past_front = false;
        break;
      }
      idx[j] = -kmax;
    }
    if (carried_past_front) return points;
  }
}

}  // namespace blockdep
