// Batch CLI for block-dependent design experiments. Subcommands read a JSON
// config (--config) and write result.json plus CSV side files into --out.
// Exit codes: 0 success, 2 validation error, 3 convergence failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>

#include "blockdep/errors.hpp"
#include "blockdep/harness.hpp"
#include "blockdep/io.hpp"
#include "blockdep/lindeberg.hpp"
#include "blockdep/solver.hpp"
#include "blockdep/statepoint.hpp"

namespace {

using blockdep::io::Json;
namespace fs = std::filesystem;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool out_required = false) {
  cmd->add_option("--config", args.config_path, "JSON config file")
      ->required();
  auto* out = cmd->add_option("--out", args.out_dir, "output directory");
  if (out_required) out->required();
}

void emit(const CommonArgs& args, const Json& result) {
  if (!args.out_dir.empty()) blockdep::io::write_result(args.out_dir, result);
  std::cout << result.dump(2) << '\n';
}

Json vector_json(const std::vector<double>& v) {
  Json arr = Json::array();
  for (double x : v) arr.push_back(x);
  return arr;
}

int run_partition_check(const CommonArgs& args) {
  const Json config = blockdep::io::load_json_file(args.config_path);
  const blockdep::Partition partition =
      blockdep::io::partition_from_json(config);
  const std::size_t d = config.value("d", std::size_t{0});
  const auto report = blockdep::validate(partition, d);
  Json result;
  result["op"] = "partition.check";
  result["p"] = partition.p;
  result["d"] = d;
  result["valid"] = report.valid();
  result["invariants_ok"] = report.invariants_ok;
  result["size_cap_ok"] = report.size_cap_ok;
  result["max_cell_size"] = report.max_cell_size;
  result["first_violation"] = report.first_violation;
  emit(args, result);
  return 0;
}

int run_partition_merge(const CommonArgs& args) {
  const Json config = blockdep::io::load_json_file(args.config_path);
  const blockdep::Partition partition =
      blockdep::io::partition_from_json(config);
  const std::size_t d = config.value("d", std::size_t{0});
  const auto aligned = blockdep::merge_cells(partition, d);
  Json result;
  result["op"] = "partition.merge";
  result["p"] = partition.p;
  result["d"] = d;
  result["s"] = aligned.size();
  result["s_bound_4p_over_d"] =
      4.0 * static_cast<double>(partition.p) / static_cast<double>(d);
  Json cells = Json::array();
  for (const auto& cell : aligned.cells) {
    Json c = Json::array();
    for (std::uint32_t idx : cell) c.push_back(idx + 1);  // 1-based out
    cells.push_back(std::move(c));
  }
  result["cells"] = std::move(cells);
  Json sources = Json::array();
  for (const auto& src : aligned.source_cells) {
    Json s = Json::array();
    for (std::size_t idx : src) s.push_back(idx + 1);
    sources.push_back(std::move(s));
  }
  result["source_cells"] = std::move(sources);
  emit(args, result);
  return 0;
}

/// qbar0/q0/q1 either explicit or derived from a "loss" object (formula value).
struct RateExponents {
  double qbar0, q0, q1;
  Json echo;
};

RateExponents rate_exponents(const Json& config) {
  RateExponents e{0.0, 0.0, 0.0, Json::object()};
  if (config.contains("loss")) {
    const auto loss = blockdep::io::loss_from_json(config.at("loss"));
    const auto profile = blockdep::loss_profile(loss);
    e.qbar0 = profile.qbar0;
    e.q0 = profile.q0;
    e.q1 = profile.q1;
    e.echo["loss"] = blockdep::io::loss_to_json(loss);
    e.echo["qbar0_formula"] = profile.qbar0;
    e.echo["qbar0_catalog"] = profile.qbar0_catalog;
    e.echo["qbar0_mismatch"] = profile.qbar0_mismatch;
  } else {
    if (!config.contains("qbar0"))
      throw blockdep::ValidationError("config: need \"loss\" or \"qbar0\"");
    e.qbar0 = config.at("qbar0").get<double>();
    e.q0 = config.value("q0", 0.0);
    e.q1 = config.value("q1", 0.0);
  }
  return e;
}

int run_rates_sigma(const CommonArgs& args) {
  const Json config = blockdep::io::load_json_file(args.config_path);
  const double n = config.at("n").get<double>();
  const double p = config.at("p").get<double>();
  const double d = config.at("d").get<double>();
  const RateExponents e = rate_exponents(config);
  const auto report = blockdep::rate_report(n, p, d, e.qbar0, e.q0, e.q1);
  Json result;
  result["op"] = "rates.sigma";
  result["n"] = n;
  result["p"] = p;
  result["d"] = d;
  result["qbar0"] = e.qbar0;
  result["q0"] = e.q0;
  result["q1"] = e.q1;
  for (auto& [key, value] : e.echo.items()) result[key] = value;
  result["sigma_n"] = report.sigma_n;
  result["omega_n"] = report.omega_n;
  emit(args, result);
  return 0;
}

int run_rates_admissible(const CommonArgs& args) {
  const Json config = blockdep::io::load_json_file(args.config_path);
  const double n = config.at("n").get<double>();
  const double alpha = config.at("alpha").get<double>();
  const double kappa = config.at("kappa").get<double>();
  const RateExponents e = rate_exponents(config);
  const auto out = blockdep::admissible_d(n, alpha, kappa, e.qbar0);
  Json result;
  result["op"] = "rates.admissible-d";
  result["n"] = n;
  result["alpha"] = alpha;
  result["kappa"] = kappa;
  result["qbar0"] = e.qbar0;
  for (auto& [key, value] : e.echo.items()) result[key] = value;
  result["exponent"] = out.exponent;
  result["log_power"] = out.log_power;
  result["threshold_at_n"] = out.threshold_at_n;
  emit(args, result);
  return 0;
}

int run_design_sample(const CommonArgs& args) {
  const Json config = blockdep::io::load_json_file(args.config_path);
  const auto spec = blockdep::io::design_from_json(config.at("design"));
  const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
  const bool analogue = config.value("gaussian_analogue", false);
  const blockdep::Matrix x = analogue ? blockdep::gaussian_analogue(spec, seed)
                                      : blockdep::sample_design(spec, seed);
  fs::create_directories(args.out_dir);
  Json sidecar;
  sidecar["n"] = spec.n;
  sidecar["p"] = spec.p;
  sidecar["family"] =
      analogue ? std::string("gaussian") : blockdep::family_name(spec.family);
  sidecar["seed"] = seed;
  blockdep::io::dump_matrix(fs::path(args.out_dir) / "X.bin", x, sidecar);
  Json result;
  result["op"] = "design.sample";
  result["design"] = blockdep::io::design_to_json(spec);
  result["seed"] = seed;
  result["gaussian_analogue"] = analogue;
  result["matrix_file"] = "X.bin";
  result["layout"] = "row-major float64 little-endian";
  emit(args, result);
  return 0;
}

int run_design_check(const CommonArgs& args) {
  const Json config = blockdep::io::load_json_file(args.config_path);
  const auto spec = blockdep::io::design_from_json(config.at("design"));
  const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
  const auto sigma = blockdep::build_sigma(spec.covariance);
  const blockdep::Matrix x = blockdep::sample_design(spec, seed);
  const auto report = blockdep::empirical_moment_check(x, sigma.sigma);
  Json result;
  result["op"] = "design.check";
  result["design"] = blockdep::io::design_to_json(spec);
  result["seed"] = seed;
  result["tau"] = spec.tau();
  result["lambda_max_sigma"] = sigma.lambda_max;
  result["max_mean_abs"] = report.max_mean_abs;
  result["max_mean_se_ratio"] = report.max_mean_se_ratio;
  result["max_cov_dev"] = report.max_cov_dev;
  result["cov_se_at_max"] = report.cov_se_at_max;
  result["max_cov_se_ratio"] = report.max_cov_se_ratio;
  result["max_cross_block_dev"] = report.max_cross_block_dev;
  result["max_cross_block_se_ratio"] = report.max_cross_block_se_ratio;
  emit(args, result);
  return 0;
}

int run_solve(const CommonArgs& args) {
  const Json config = blockdep::io::load_json_file(args.config_path);
  const auto design = blockdep::io::design_from_json(config.at("design"));
  const auto theta0 = blockdep::io::theta0_from_json(config.at("theta0"));
  const auto noise = blockdep::io::noise_from_json(config.at("noise"));
  const auto loss = blockdep::io::loss_from_json(config.at("loss"));
  const double lambda = config.at("lambda").get<double>();
  const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
  const double tol = config.value("tol", 1e-8);
  const std::size_t max_iter = config.value("max_iter", std::size_t{50000});
  std::optional<double> box;
  if (config.contains("box_L")) box = config.at("box_L").get<double>();

  const auto instance =
      blockdep::synth_data(design, theta0, noise, lambda, loss, seed, box);
  const auto solution = blockdep::erm_solve(instance, tol, max_iter);

  Json result;
  result["op"] = "solve";
  result["design"] = blockdep::io::design_to_json(design);
  result["loss"] = blockdep::io::loss_to_json(loss);
  result["lambda"] = lambda;
  result["seed"] = seed;
  result["tol"] = tol;
  result["converged"] = solution.converged;
  result["iterations"] = solution.iterations;
  result["objective"] = solution.objective;
  result["kkt_residual"] = solution.kkt_residual;
  result["error_p_inv_norm_sq"] =
      blockdep::linalg::dot(solution.w_hat, solution.w_hat) /
      static_cast<double>(design.p);
  result["w_hat_inf"] = blockdep::linalg::norm_inf(solution.w_hat);
  result["w_hat"] = vector_json(solution.w_hat);
  emit(args, result);
  if (!args.out_dir.empty()) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < solution.objective_trace.size(); ++i)
      rows.push_back({static_cast<double>(i), solution.objective_trace[i]});
    blockdep::io::write_csv(fs::path(args.out_dir) / "trace.csv",
                            {"iteration", "objective"}, rows);
  }
  if (!solution.converged)
    throw blockdep::ConvergenceError("solve: not converged");
  return 0;
}

int run_statepoint(const CommonArgs& args) {
  const Json config = blockdep::io::load_json_file(args.config_path);
  const auto input = blockdep::io::state_input_from_json(config);
  const double tol = config.value("tol", 1e-10);
  const std::size_t max_iter = config.value("max_iter", std::size_t{300});
  const auto sol = blockdep::solve_state_evolution(input, tol, max_iter);
  Json result;
  result["op"] = "statepoint.solve";
  result["tau0"] = input.tau0;
  result["lambda"] = input.lambda;
  result["loss"] = blockdep::io::loss_to_json(input.loss);
  result["noise"] = blockdep::io::noise_to_json(input.noise);
  result["pi0_second_moment"] = input.pi0_second_moment;
  result["beta_star"] = sol.beta_star;
  result["gamma_star"] = sol.gamma_star;
  result["predicted_error"] = sol.predicted_error;
  result["eq1_residual"] = sol.eq1_residual;
  result["eq2_residual"] = sol.eq2_residual;
  result["eq1_raw_residual"] = sol.eq1_raw_residual;
  result["iterations"] = sol.iterations;
  result["converged"] = sol.converged;
  result["multistart_agreed"] = sol.multistart_agreed;
  emit(args, result);
  if (!args.out_dir.empty()) {
    std::vector<std::vector<double>> rows;
    for (const auto& t : sol.trace)
      rows.push_back({t[0], t[1], t[2], t[3], t[4]});
    blockdep::io::write_csv(fs::path(args.out_dir) / "trace.csv",
                            {"iteration", "beta", "gamma", "eq1_residual", "eq2_residual"},
                            rows);
  }
  return 0;
}

int run_universality_cmd(const CommonArgs& args) {
  const Json config_json = blockdep::io::load_json_file(args.config_path);
  const auto config = blockdep::io::experiment_from_json(config_json);
  const auto res = blockdep::run_universality(config);

  Json result;
  result["op"] = "universality.run";
  result["design"] = blockdep::io::design_to_json(config.design);
  result["loss"] = blockdep::io::loss_to_json(config.loss);
  result["lambda"] = config.lambda;
  result["replications"] = config.replications;
  result["master_seed"] = config.master_seed;
  result["included"] = res.min_obj_x.size();
  result["excluded"] = res.excluded;
  result["ks_min_objective"] = res.ks;
  result["ks_error"] = blockdep::ks_statistic(res.err_x, res.err_g);
  result["ks_winf"] = blockdep::ks_statistic(res.winf_x, res.winf_g);
  result["mean_gap"] = res.mean_gap;
  result["mean_gap_se"] = res.mean_gap_se;
  result["var_gap"] = res.var_gap;
  result["var_gap_se"] = res.var_gap_se;
  result["mean_abs_coord_x"] = res.mean_abs_coord_x;
  result["mean_abs_coord_g"] = res.mean_abs_coord_g;
  emit(args, result);
  if (!args.out_dir.empty()) {
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < res.min_obj_x.size(); ++r)
      rows.push_back({static_cast<double>(r), res.min_obj_x[r],
                      res.min_obj_g[r], res.err_x[r], res.err_g[r],
                      res.winf_x[r], res.winf_g[r]});
    blockdep::io::write_csv(
        fs::path(args.out_dir) / "samples.csv",
        {"rep", "min_obj_x", "min_obj_g", "err_x", "err_g", "winf_x", "winf_g"},
        rows);
  }
  return 0;
}

int run_convergence_cmd(const CommonArgs& args) {
  const Json config_json = blockdep::io::load_json_file(args.config_path);
  const auto config = blockdep::io::experiment_from_json(config_json);

  // state-evolution inputs derive from the experiment, so they cannot drift
  blockdep::StateEvolutionInput se;
  se.tau0 = static_cast<double>(config.design.n) /
            static_cast<double>(config.design.p);
  se.lambda = config.lambda;
  se.loss = config.loss;
  se.noise = config.noise;
  se.pi0_second_moment = config.theta0.second_moment(config.design.p);
  if (config_json.contains("quad_nodes"))
    se.quad_nodes = config_json.at("quad_nodes").get<int>();
  if (config_json.contains("mc_samples"))
    se.mc_samples = config_json.at("mc_samples").get<std::size_t>();

  const auto report = blockdep::run_error_convergence(config, se);
  Json result;
  result["op"] = "convergence.run";
  result["design"] = blockdep::io::design_to_json(config.design);
  result["loss"] = blockdep::io::loss_to_json(config.loss);
  result["lambda"] = config.lambda;
  result["tau0"] = se.tau0;
  result["replications"] = config.replications;
  result["master_seed"] = config.master_seed;
  result["excluded"] = report.excluded;
  result["mean_error"] = report.mean_err;
  result["se_error"] = report.se_err;
  result["predicted_error"] = report.predicted;
  result["relative_gap"] = report.rel_gap;
  result["beta_star"] = report.state.beta_star;
  result["gamma_star"] = report.state.gamma_star;
  result["multistart_agreed"] = report.state.multistart_agreed;
  emit(args, result);
  if (!args.out_dir.empty()) {
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < report.per_rep_err.size(); ++r)
      rows.push_back({static_cast<double>(r), report.per_rep_err[r]});
    blockdep::io::write_csv(fs::path(args.out_dir) / "samples.csv",
                            {"rep", "error_p_inv_norm_sq"}, rows);
  }
  return 0;
}

std::function<double(const blockdep::Matrix&)> functional_by_name(
    const std::string& name) {
  if (name == "sum")
    return [](const blockdep::Matrix& m) {
      double acc = 0.0;
      for (double v : m.data) acc += v;
      return acc;
    };
  if (name == "frobenius_sq")
    return [](const blockdep::Matrix& m) {
      double acc = 0.0;
      for (double v : m.data) acc += v * v;
      return acc;
    };
  if (name == "entry") return [](const blockdep::Matrix& m) { return m(0, 0); };
  if (name == "entry_sq")
    return [](const blockdep::Matrix& m) { return m(0, 0) * m(0, 0); };
  if (name == "entry_cube")
    return [](const blockdep::Matrix& m) {
      return m(0, 0) * m(0, 0) * m(0, 0);
    };
  if (name == "softmin_objective")
    // soft-min of the huber ridge objective over the +-1/2 diagonal grid
    return [](const blockdep::Matrix& m) {
      blockdep::ProblemInstance inst;
      inst.X = m;
      inst.theta0.assign(m.cols, 0.1);
      inst.xi.assign(m.rows, 0.5);
      blockdep::linalg::gemv(inst.X, inst.theta0, inst.Y);
      for (std::size_t i = 0; i < inst.Y.size(); ++i) inst.Y[i] += inst.xi[i];
      inst.lambda = 0.5;
      inst.loss = blockdep::LossKind::huber(1.0);
      std::vector<double> values;
      blockdep::Vector w(m.cols);
      for (double level : {-0.5, 0.0, 0.5}) {
        for (auto& v : w) v = level;
        values.push_back(blockdep::objective(inst, w));
      }
      return blockdep::soft_min(values, 2.0);
    };
  throw blockdep::ValidationError("unknown functional \"" + name + "\"");
}

int run_lindeberg_telescope(const CommonArgs& args) {
  const Json config = blockdep::io::load_json_file(args.config_path);
  const auto design_x = blockdep::io::design_from_json(config.at("design_x"));
  const auto design_w = blockdep::io::design_from_json(config.at("design_w"));
  const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
  const std::size_t reps = config.value("reps", std::size_t{1});
  const auto f = functional_by_name(config.at("f").get<std::string>());
  if (design_x.n != design_w.n || design_x.p != design_w.p)
    throw blockdep::ValidationError("telescope: designs must share (n, p)");

  double worst = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    blockdep::SwapPath path;
    const std::uint64_t rep_seed = blockdep::Rng::stream(seed, r).next_u64();
    path.X = blockdep::sample_design(design_x, rep_seed);
    path.W = blockdep::sample_design(design_w, rep_seed + 1);
    path.partition = design_x.covariance.partition;
    worst = std::max(worst, blockdep::telescoping_check(path, f));
  }
  Json result;
  result["op"] = "lindeberg.telescope";
  result["f"] = config.at("f");
  result["reps"] = reps;
  result["seed"] = seed;
  result["max_residual"] = worst;
  emit(args, result);
  return 0;
}

int run_lindeberg_gap(const CommonArgs& args) {
  const Json config = blockdep::io::load_json_file(args.config_path);
  const auto design_a = blockdep::io::design_from_json(config.at("design_a"));
  const auto design_b = blockdep::io::design_from_json(config.at("design_b"));
  const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
  const std::size_t reps = config.at("reps").get<std::size_t>();
  const auto f = functional_by_name(config.at("f").get<std::string>());
  const auto est = blockdep::mc_gap(design_a, design_b, f, reps, seed);
  Json result;
  result["op"] = "lindeberg.gap";
  result["f"] = config.at("f");
  result["reps"] = reps;
  result["seed"] = seed;
  result["gap"] = est.gap;
  result["se"] = est.se;
  result["mean_a"] = est.mean_a;
  result["mean_b"] = est.mean_b;
  emit(args, result);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"block-dependent design universality toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  std::function<int(const CommonArgs&)> action;
  const auto bind = [&action](int (*fn)(const CommonArgs&)) {
    return [&action, fn]() { action = fn; };
  };

  auto* partition = app.add_subcommand("partition", "partition algebra");
  partition->require_subcommand(1);
  auto* pc = partition->add_subcommand("check", "validate a partition against d");
  add_common(pc, args);
  pc->callback(bind(run_partition_check));
  auto* pm = partition->add_subcommand("merge", "merge cells toward size d/2+1");
  add_common(pm, args);
  pm->callback(bind(run_partition_merge));

  auto* rates = app.add_subcommand("rates", "rate formulas");
  rates->require_subcommand(1);
  auto* rs = rates->add_subcommand("sigma", "evaluate sigma_n and omega_n");
  add_common(rs, args);
  rs->callback(bind(run_rates_sigma));
  auto* ra = rates->add_subcommand("admissible-d", "admissible dependence order");
  add_common(ra, args);
  ra->callback(bind(run_rates_admissible));

  auto* design = app.add_subcommand("design", "design sampling");
  design->require_subcommand(1);
  auto* ds = design->add_subcommand("sample", "sample and dump a design matrix");
  add_common(ds, args, /*out_required=*/true);
  ds->callback(bind(run_design_sample));
  auto* dc = design->add_subcommand("check", "empirical moment check");
  add_common(dc, args);
  dc->callback(bind(run_design_check));

  auto* solve = app.add_subcommand("solve", "synthesize data and minimize");
  add_common(solve, args);
  solve->callback(bind(run_solve));

  auto* statepoint = app.add_subcommand("statepoint", "fixed-point system");
  statepoint->require_subcommand(1);
  auto* ss = statepoint->add_subcommand("solve", "solve for (beta*, gamma*)");
  add_common(ss, args);
  ss->callback(bind(run_statepoint));

  auto* universality = app.add_subcommand("universality", "two-arm experiments");
  universality->require_subcommand(1);
  auto* ur = universality->add_subcommand("run", "run a universality experiment");
  add_common(ur, args);
  ur->callback(bind(run_universality_cmd));

  auto* convergence = app.add_subcommand("convergence", "error convergence");
  convergence->require_subcommand(1);
  auto* cr = convergence->add_subcommand("run", "compare against the fixed point");
  add_common(cr, args);
  cr->callback(bind(run_convergence_cmd));

  auto* lindeberg = app.add_subcommand("lindeberg", "swap-path diagnostics");
  lindeberg->require_subcommand(1);
  auto* lt = lindeberg->add_subcommand("telescope", "telescoping residual");
  add_common(lt, args);
  lt->callback(bind(run_lindeberg_telescope));
  auto* lg = lindeberg->add_subcommand("gap", "Monte Carlo functional gap");
  add_common(lg, args);
  lg->callback(bind(run_lindeberg_gap));

  CLI11_PARSE(app, argc, argv);

  try {
    return action(args);
  } catch (const blockdep::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const blockdep::ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
