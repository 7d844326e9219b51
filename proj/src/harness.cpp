#include "blockdep/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "blockdep/errors.hpp"
#include "blockdep/kernels.hpp"

namespace blockdep {

double rate_sigma_n(double n, double p, double d, double qbar0) {
  if (!(n > 0.0 && p > 0.0 && d > 0.0))
    throw ValidationError("sigma_n: n, p, d must be positive");
  if (d > p) throw ValidationError("sigma_n: d must not exceed p");
  if (qbar0 < 0.0) throw ValidationError("sigma_n: qbar0 must be >= 0");
  const double term1 =
      p * std::pow(d, 3.0 + qbar0 / 2.0) / std::pow(n, 2.5);
  const double term2 = p * d * d / std::pow(n, 1.5);
  const double term3 =
      p * std::pow(d, qbar0 + 2.0) / std::pow(n, (qbar0 + 3.0) / 2.0);
  return term1 + term2 + term3;
}

double rate_omega_n(double n, double sigma_n, double q0, double q1) {
  return std::pow(n, -(q0 * q1 + 3.0) / 2.0) * sigma_n;
}

RateReport rate_report(double n, double p, double d, double qbar0, double q0,
                       double q1) {
  RateReport r;
  r.n = n;
  r.p = p;
  r.d = d;
  r.qbar0 = qbar0;
  r.q0 = q0;
  r.q1 = q1;
  r.sigma_n = rate_sigma_n(n, p, d, qbar0);
  r.omega_n = rate_omega_n(n, r.sigma_n, q0, q1);
  return r;
}

AdmissibleD admissible_d(double n, double alpha, double kappa, double qbar0) {
  if (qbar0 < 0.0) throw ValidationError("admissible_d: qbar0 must be >= 0");
  const double alpha_max = 1.0 / (2.0 * qbar0 + 6.0);
  if (!(alpha >= 0.0 && alpha <= alpha_max))
    throw ValidationError("admissible_d: alpha must lie in [0, " +
                          std::to_string(alpha_max) + "]");
  if (kappa < 0.0) throw ValidationError("admissible_d: kappa must be >= 0");
  AdmissibleD out;
  out.exponent = 0.25 - (qbar0 + 3.0) * alpha / 2.0;
  out.log_power = 6.0 + (2.0 * qbar0 + 6.0) * kappa;
  if (n > 1.0)
    out.threshold_at_n =
        std::pow(n, out.exponent) / std::pow(std::log(n), out.log_power);
  return out;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw ValidationError("ks_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na -
                              static_cast<double>(j) / nb));
  }
  return d;
}

std::size_t worker_threads() {
  std::size_t n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("BLOCKDEP_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1 && static_cast<std::size_t>(cap) < n)
      n = static_cast<std::size_t>(cap);
  }
  return n;
}

double jackknife_se(const std::vector<double>& sample,
                    double (*statistic)(const std::vector<double>&)) {
  const std::size_t n = sample.size();
  if (n < 2) return 0.0;
  std::vector<double> loo;
  loo.reserve(n - 1);
  std::vector<double> stats(n);
  for (std::size_t i = 0; i < n; ++i) {
    loo.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) loo.push_back(sample[j]);
    stats[i] = statistic(loo);
  }
  double mean = 0.0;
  for (double s : stats) mean += s;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double s : stats) ss += (s - mean) * (s - mean);
  return std::sqrt(ss * (static_cast<double>(n) - 1.0) /
                   static_cast<double>(n));
}

void ExperimentConfig::check() const {
  const LossProfile profile = loss_profile(loss);
  validate(design, profile.qbar0);
  noise.check();
  if (replications < 2)
    throw ValidationError("experiment: need at least 2 replications");
  if (!(tol > 0.0)) throw ValidationError("experiment: tol must be positive");
  if (loss.kind != LossKind::Kind::squared && !(lambda > 0.0))
    throw ValidationError("experiment: lambda must be > 0 for this loss");
  if (max_excluded_fraction < 0.0 || max_excluded_fraction >= 1.0)
    throw ValidationError("experiment: bad max_excluded_fraction");
}

namespace {

constexpr std::uint64_t kTheta0Stream = 0x746865746130ULL;
constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;

struct RepDraws {
  Vector theta0;
  Vector xi;
  std::uint64_t rep_key = 0;
};

RepDraws draw_shared(const ExperimentConfig& config, std::size_t rep) {
  RepDraws d;
  d.rep_key = Rng::stream(config.master_seed, rep).next_u64();
  Rng theta_rng = Rng::stream(d.rep_key, kTheta0Stream);
  d.theta0 = config.theta0.draw(config.design.p, theta_rng);
  Rng noise_rng = Rng::stream(d.rep_key, kNoiseStream);
  d.xi.resize(config.design.n);
  for (auto& v : d.xi) v = config.noise.draw(noise_rng);
  return d;
}

ProblemInstance assemble(const ExperimentConfig& config, Matrix x,
                         const RepDraws& draws) {
  ProblemInstance inst;
  inst.X = std::move(x);
  inst.theta0 = draws.theta0;
  inst.xi = draws.xi;
  linalg::gemv(inst.X, inst.theta0, inst.Y);
  for (std::size_t i = 0; i < inst.Y.size(); ++i) inst.Y[i] += inst.xi[i];
  inst.lambda = config.lambda;
  inst.loss = config.loss;
  return inst;
}

struct RepOutcome {
  bool ok = false;
  double min_obj_x = 0.0, min_obj_g = 0.0;
  double err_x = 0.0, err_g = 0.0;
  double winf_x = 0.0, winf_g = 0.0;
  Vector abs_w_x, abs_w_g;
};

template <typename Work>
void run_parallel(std::size_t reps, Work&& work) {
  const std::size_t workers = std::min(worker_threads(), reps);
  if (workers <= 1) {
    for (std::size_t r = 0; r < reps; ++r) work(r);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= reps) return;
      work(r);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(loop);
  loop();
  for (auto& th : pool) th.join();
}

double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v) {
  const double m = sample_mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

UniversalityResult run_universality(const ExperimentConfig& config) {
  config.check();
  const std::size_t reps = config.replications;
  const std::size_t p = config.design.p;
  std::vector<RepOutcome> slots(reps);

  run_parallel(reps, [&](std::size_t r) {
    RepOutcome& out = slots[r];
    try {
      const RepDraws draws = draw_shared(config, r);
      ProblemInstance inst_x =
          assemble(config, sample_design(config.design, draws.rep_key), draws);
      ProblemInstance inst_g = assemble(
          config, gaussian_analogue(config.design, draws.rep_key), draws);
      const Solution sol_x = erm_solve(inst_x, config.tol, config.max_iter);
      const Solution sol_g = erm_solve(inst_g, config.tol, config.max_iter);
      if (!sol_x.converged || !sol_g.converged) return;
      out.min_obj_x = sol_x.objective;
      out.min_obj_g = sol_g.objective;
      out.err_x = linalg::dot(sol_x.w_hat, sol_x.w_hat) / static_cast<double>(p);
      out.err_g = linalg::dot(sol_g.w_hat, sol_g.w_hat) / static_cast<double>(p);
      out.winf_x = linalg::norm_inf(sol_x.w_hat);
      out.winf_g = linalg::norm_inf(sol_g.w_hat);
      out.abs_w_x.resize(p);
      out.abs_w_g.resize(p);
      for (std::size_t j = 0; j < p; ++j) {
        out.abs_w_x[j] = std::fabs(sol_x.w_hat[j]);
        out.abs_w_g[j] = std::fabs(sol_g.w_hat[j]);
      }
      out.ok = true;
    } catch (const ConvergenceError&) {
      out.ok = false;
    }
  });

  UniversalityResult res;
  Vector coord_x(p, 0.0), coord_g(p, 0.0);
  for (const RepOutcome& out : slots) {
    if (!out.ok) {
      ++res.excluded;
      continue;
    }
    res.min_obj_x.push_back(out.min_obj_x);
    res.min_obj_g.push_back(out.min_obj_g);
    res.err_x.push_back(out.err_x);
    res.err_g.push_back(out.err_g);
    res.winf_x.push_back(out.winf_x);
    res.winf_g.push_back(out.winf_g);
    kernels::active().axpy(1.0, out.abs_w_x.data(), coord_x.data(), p);
    kernels::active().axpy(1.0, out.abs_w_g.data(), coord_g.data(), p);
  }
  const std::size_t kept = res.min_obj_x.size();
  if (static_cast<double>(res.excluded) >
      config.max_excluded_fraction * static_cast<double>(reps))
    throw ConvergenceError("universality: " + std::to_string(res.excluded) +
                           " of " + std::to_string(reps) +
                           " replications failed to converge");
  if (kept < 2)
    throw ConvergenceError("universality: fewer than 2 usable replications");

  const double dk = static_cast<double>(kept);
  for (std::size_t j = 0; j < p; ++j) {
    res.mean_abs_coord_x = std::max(res.mean_abs_coord_x, coord_x[j] / dk);
    res.mean_abs_coord_g = std::max(res.mean_abs_coord_g, coord_g[j] / dk);
  }

  res.ks = ks_statistic(res.min_obj_x, res.min_obj_g);

  std::vector<double> diffs(kept);
  for (std::size_t r = 0; r < kept; ++r)
    diffs[r] = res.min_obj_x[r] - res.min_obj_g[r];
  res.mean_gap = sample_mean(diffs);
  res.mean_gap_se = jackknife_se(diffs, sample_mean);

  res.var_gap = sample_var(res.min_obj_x) - sample_var(res.min_obj_g);
  // delete-one jackknife over paired replications
  {
    std::vector<double> stats(kept);
    std::vector<double> xs, gs;
    xs.reserve(kept - 1);
    gs.reserve(kept - 1);
    for (std::size_t i = 0; i < kept; ++i) {
      xs.clear();
      gs.clear();
      for (std::size_t r = 0; r < kept; ++r) {
        if (r == i) continue;
        xs.push_back(res.min_obj_x[r]);
        gs.push_back(res.min_obj_g[r]);
      }
      stats[i] = sample_var(xs) - sample_var(gs);
    }
    double mean = sample_mean(stats);
    double ss = 0.0;
    for (double s : stats) ss += (s - mean) * (s - mean);
    res.var_gap_se = std::sqrt(ss * (dk - 1.0) / dk);
  }
  return res;
}

ConvergenceReport run_error_convergence(const ExperimentConfig& config,
                                        const StateEvolutionInput& se_input) {
  config.check();
  se_input.check();
  if (config.loss.kind == LossKind::Kind::squared)
    throw ValidationError(
        "convergence run: loss must be absolute or huber (robust cost)");
  const double tau0 = static_cast<double>(config.design.n) /
                      static_cast<double>(config.design.p);
  if (std::fabs(se_input.tau0 - tau0) > 1e-9)
    throw ValidationError("convergence run: se_input.tau0 != n/p");
  if (std::fabs(se_input.lambda - config.lambda) > 1e-12)
    throw ValidationError("convergence run: se_input.lambda != lambda");
  if (se_input.noise.kind != config.noise.kind)
    throw ValidationError("convergence run: noise law mismatch");
  const double pi2 = config.theta0.second_moment(config.design.p);
  if (std::fabs(se_input.pi0_second_moment - pi2) > 1e-9)
    throw ValidationError("convergence run: E[Pi0^2] mismatch");

  ConvergenceReport report;
  report.state = solve_state_evolution(se_input);
  report.predicted = report.state.predicted_error;

  // The fixed-point system describes the minimizer of the unnormalized
  // objective sum_i loss + (lambda/2)||w+theta0||^2; dividing by n, that is
  // the same argmin as the solver's H with ridge coefficient lambda/n.
  ExperimentConfig scaled = config;
  scaled.lambda = config.lambda / static_cast<double>(config.design.n);

  const std::size_t reps = config.replications;
  const std::size_t p = config.design.p;
  std::vector<double> errs(reps, 0.0);
  std::vector<std::uint8_t> ok(reps, 0);

  run_parallel(reps, [&](std::size_t r) {
    try {
      const RepDraws draws = draw_shared(scaled, r);
      ProblemInstance inst =
          assemble(scaled, sample_design(scaled.design, draws.rep_key), draws);
      const Solution sol = erm_solve(inst, scaled.tol, scaled.max_iter);
      if (!sol.converged) return;
      errs[r] = linalg::dot(sol.w_hat, sol.w_hat) / static_cast<double>(p);
      ok[r] = 1;
    } catch (const ConvergenceError&) {
    }
  });

  for (std::size_t r = 0; r < reps; ++r) {
    if (!ok[r]) {
      ++report.excluded;
      continue;
    }
    report.per_rep_err.push_back(errs[r]);
  }
  if (static_cast<double>(report.excluded) >
      config.max_excluded_fraction * static_cast<double>(reps))
    throw ConvergenceError("convergence run: too many failed replications");
  if (report.per_rep_err.size() < 2)
    throw ConvergenceError("convergence run: fewer than 2 usable replications");

  report.mean_err = sample_mean(report.per_rep_err);
  report.se_err = jackknife_se(report.per_rep_err, sample_mean);
  report.rel_gap = std::fabs(report.mean_err - report.predicted) /
                   std::max(report.predicted, 1e-300);
  return report;
}

}  // namespace blockdep
