// Command-line front end: simulate | estimate | optimize | evaluate | reproduce.

#include "proplab/config.hpp"
#include "proplab/experiments.hpp"
#include "proplab/io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

using namespace proplab;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitConvergence = 3;

struct Options {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 0;
  std::string out;
  std::string dataset_dir;
  std::string estimation_dir;
  std::string strategies_dir;
  std::string target;
};

ExperimentConfig resolve_config(const Options& opt) {
  ExperimentConfig c = opt.config_path.empty() ? ExperimentConfig{} : load_config(opt.config_path);
  if (opt.seed_set) c.dataset.seed = opt.seed;
  if (opt.jobs > 0) c.jobs = opt.jobs;
  if (const char* env = std::getenv("PROPLAB_OUT"); env && *env) {
    c.output_dir = env;
  } else if (!opt.out.empty()) {
    c.output_dir = opt.out;
  }
  c.validate();
  return c;
}

void require_dir(const std::string& dir, const std::string& what) {
  require(!dir.empty(), "missing --" + what + " directory");
  require(std::filesystem::is_directory(dir), what + " directory not found: " + dir);
}

SignalPath control_path(const ExperimentConfig& c, SignalModel& model) {
  const TimeGrid grid = c.grid();
  if (c.control.signal == "ou") {
    model = SignalModel::ou(c.dataset.signal);
    return simulate_ou(c.dataset.signal, grid, c.control.signal_seed);
  }
  model = SignalModel::zero();
  return zero_path(grid);
}

int cmd_simulate(const Options& opt) {
  const ExperimentConfig c = resolve_config(opt);
  const Dataset d = generate_from_config(c);
  write_dataset(c.output_dir, d);
  write_json(c.output_dir + "/config.json", to_json(c));
  std::cout << "dataset: " << d.size() << " episodes x " << d.grid.size() << " steps -> " << c.output_dir << "\n";
  return 0;
}

int cmd_estimate(const Options& opt) {
  const ExperimentConfig c = resolve_config(opt);
  require_dir(opt.dataset_dir, "dataset");
  const Dataset d = read_dataset(opt.dataset_dir);
  const EstimationResult r = estimate(d, c.estimation);
  json extra{{"dataset", opt.dataset_dir}, {"config", to_json(c)}};
  const MatrixXd& truth = d.provenance.true_propagator;
  if (r.mode == EstimationMode::convolution && truth.rows() == r.projected.rows() && truth.col(0).minCoeff() > 0.0) {
    const RelativeErrors e = relative_errors(truth.col(0), r.unconstrained.col(0), r.projected.col(0));
    extra["err"] = e.err;
    extra["err_proj"] = e.err_proj;
  }
  write_estimation(c.output_dir, r, d.grid, extra);
  std::cout << to_string(r.mode) << " estimate: C(N) = " << r.confidence << ", projection iterations "
            << r.iterations << (r.converged ? "" : " (not converged)") << " -> " << c.output_dir << "\n";
  return r.converged ? 0 : kExitConvergence;
}

int cmd_optimize(const Options& opt) {
  const ExperimentConfig c = resolve_config(opt);
  require_dir(opt.estimation_dir, "estimation");
  const EstimationResult est = read_estimation(opt.estimation_dir);
  const TimeGrid grid = c.grid();
  require(static_cast<std::size_t>(est.gram.size()) == grid.size(), "estimation size does not match the config grid");
  SignalModel model = SignalModel::zero();
  const SignalPath path = control_path(c, model);
  const double x0 = c.control.x0;
  const MatrixXd g_est = est.propagator_matrix();

  PessimisticConfig pc = c.control.pessimism;
  pc.noise_scale = est.noise_scale;
  if (pc.kernel_bound < 0.0) pc.kernel_bound = est.kernel_bound;
  const VectorXd mean_signal = expected_signal(model, path);
  Strategy greedy = greedy_strategy(g_est, model, path, x0);
  Strategy pess = est.mode == EstimationMode::volterra
                      ? pessimistic_strategy_volterra(g_est, est.gram, pc, mean_signal, x0)
                      : pessimistic_strategy_convolution(VectorXd(est.projected.col(0)), est.gram, pc, mean_signal, x0);
  Strategy optimal = optimal_strategy(c.kernel.propagator(grid), model, path, x0);
  greedy.diagnostics.objective = cost(greedy.u, g_est, path.A);
  optimal.diagnostics.objective = cost(optimal.u, c.kernel.propagator(grid).entries(), path.A);

  const json extra{{"estimation", opt.estimation_dir}, {"mode", to_string(est.mode)}, {"signal", c.control.signal}};
  write_strategy(c.output_dir + "/greedy.csv", greedy, grid, extra);
  write_strategy(c.output_dir + "/pessimistic.csv", pess, grid, extra);
  write_strategy(c.output_dir + "/optimal.csv", optimal, grid, extra);
  write_matrix_csv(c.output_dir + "/signal.csv", path.A);
  std::cout << "strategies written to " << c.output_dir << (pess.diagnostics.ball_active ? " (warning: strategy bound active)" : "")
            << "\n";
  return pess.diagnostics.converged ? 0 : kExitConvergence;
}

int cmd_evaluate(const Options& opt) {
  const ExperimentConfig c = resolve_config(opt);
  require_dir(opt.estimation_dir, "estimation");
  require_dir(opt.strategies_dir, "strategies");
  const EstimationResult est = read_estimation(opt.estimation_dir);
  const TimeGrid grid = c.grid();
  const MatrixXd g_star = c.kernel.propagator(grid).entries();
  const MatrixXd g_est = est.propagator_matrix();
  const Strategy optimal = read_strategy(opt.strategies_dir + "/optimal.csv");
  const Strategy greedy = read_strategy(opt.strategies_dir + "/greedy.csv");
  const Strategy pess = read_strategy(opt.strategies_dir + "/pessimistic.csv");
  const VectorXd signal = read_matrix_csv(opt.strategies_dir + "/signal.csv").col(0);
  for (const auto* s : {&optimal, &greedy, &pess}) {
    require(s->u.size() == static_cast<Eigen::Index>(grid.size()), "strategy length does not match the grid");
    check_fuel(*s);
  }

  PessimisticConfig pc = c.control.pessimism;
  pc.noise_scale = est.noise_scale;
  if (pc.kernel_bound < 0.0) pc.kernel_bound = est.kernel_bound;
  PenaltyFn penalty;
  if (est.mode == EstimationMode::volterra) {
    const PessimisticConstants k = resolve_volterra_constants(g_est, est.gram, pc, c.control.x0);
    penalty = [=](const VectorXd& u) { return penalty_l1(u, est.gram, k.confidence, k.strategy_bound); };
  } else {
    const PessimisticConstants k =
        resolve_convolution_constants(VectorXd(est.projected.col(0)), est.gram, pc, c.control.x0);
    penalty = [=](const VectorXd& u) { return penalty_l2(u, est.gram, k.confidence, k.strategy_bound); };
  }

  Table costs{{"strategy", "context", "impact_cost", "signal_cost", "penalty", "total"}, {}};
  json report{{"estimation", opt.estimation_dir}, {"strategies", opt.strategies_dir}, {"config", to_json(c)}};
  for (const auto* s : {&optimal, &greedy, &pess}) {
    for (const auto& [name, g] : {std::pair<std::string, const MatrixXd*>{"true", &g_star}, {"estimated", &g_est}}) {
      const double pen = name == "estimated" ? penalty(s->u) : 0.0;
      const CostReport r = execution_cost(s->u, *g, signal, pen, name);
      costs.add({to_string(s->kind), name, format_double(r.impact_cost), format_double(r.signal_cost),
                 format_double(r.penalty), format_double(r.total)});
    }
  }
  for (const auto* s : {&greedy, &pess}) {
    const PenaltyFn pen = s->kind == StrategyKind::pessimistic ? penalty : PenaltyFn{};
    const RegretReport r = suboptimality_decomposition(s->u, optimal.u, g_star, g_est, signal, pen);
    report[to_string(s->kind)] = {{"suboptimality", r.suboptimality},
                                  {"spurious_correlation", r.spurious_correlation},
                                  {"intrinsic_uncertainty", r.intrinsic_uncertainty},
                                  {"optimization_error", r.optimization_error},
                                  {"bound", r.bound},
                                  {"held", r.held}};
  }
  if (est.mode == EstimationMode::convolution && g_star.col(0).minCoeff() > 0.0) {
    const RelativeErrors e = relative_errors(g_star.col(0), est.unconstrained.col(0), est.projected.col(0));
    report["err"] = e.err;
    report["err_proj"] = e.err_proj;
  }
  costs.write(c.output_dir + "/costs.csv");
  write_json(c.output_dir + "/evaluation.json", report);
  std::cout << "evaluation written to " << c.output_dir << "\n";
  return 0;
}

int cmd_reproduce(const Options& opt) {
  const ExperimentConfig c = resolve_config(opt);
  const auto files = reproduce(opt.target, c, c.output_dir, c.jobs);
  for (const auto& f : files) std::cout << f << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Propagator estimation and pessimistic liquidation experiments"};
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&opt](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option_function<std::uint64_t>(
        "--seed", [&opt](const std::uint64_t& s) { opt.seed = s; opt.seed_set = true; }, "Master seed");
    sub->add_option("--jobs", opt.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", opt.out, "Output directory (PROPLAB_OUT overrides)");
  };
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset");
  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate a propagator from a dataset");
  auto* optimize = app.add_subcommand("optimize", "Compute greedy, pessimistic and optimal strategies");
  auto* evaluate = app.add_subcommand("evaluate", "Price strategies and decompose their suboptimality");
  auto* reproduce_cmd = app.add_subcommand("reproduce", "Run a named reproduction target");
  for (auto* sub : {simulate, estimate_cmd, optimize, evaluate, reproduce_cmd}) add_common(sub);
  estimate_cmd->add_option("--dataset", opt.dataset_dir, "Dataset directory")->required();
  optimize->add_option("--estimation", opt.estimation_dir, "Estimation directory")->required();
  evaluate->add_option("--estimation", opt.estimation_dir, "Estimation directory")->required();
  evaluate->add_option("--strategies", opt.strategies_dir, "Strategy directory from optimize")->required();
  reproduce_cmd->add_option("target", opt.target, "Target name")
      ->required()
      ->check(CLI::IsMember(reproduction_targets()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*simulate) return cmd_simulate(opt);
    if (*estimate_cmd) return cmd_estimate(opt);
    if (*optimize) return cmd_optimize(opt);
    if (*evaluate) return cmd_evaluate(opt);
    if (*reproduce_cmd) return cmd_reproduce(opt);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
