#include "proplab/experiments.hpp"

#include "proplab/io.hpp"
#include "proplab/parallel.hpp"

#include <algorithm>
#include <map>

namespace proplab {

using nlohmann::json;

namespace {

// Reference single-run values, written next to computed rows for comparison.
struct AccuracyReference {
  std::size_t n;
  double err_power, proj_power, err_exp, proj_exp;
};
constexpr AccuracyReference kAccuracyReference[] = {
    {63, 8.4e-3, 1.9e-3, 9.8e-3, 4.4e-3},
    {126, 6.9e-3, 1.7e-3, 5.3e-3, 2.9e-3},
    {252, 4.2e-3, 1.2e-3, 4.2e-3, 2.2e-3},
};
constexpr double kReferenceOptimal = 4500.24;
constexpr double kReferenceGreedy = 5216.68;
constexpr double kReferencePessimistic = 4537.19;

KernelSpec accuracy_kernel(const std::string& kind, const ExperimentConfig& base) {
  KernelSpec k = base.kernel;
  k.kind = kind;
  if (kind == "power_law") k.beta = 0.1;
  else k.rho = 0.1;
  return k;
}

Dataset prefix(const Dataset& d, std::size_t n) {
  Dataset p = d;
  p.episodes.resize(std::min(n, d.size()));
  return p;
}

std::string str(double x) { return format_double(x); }

}  // namespace

const std::vector<std::string>& reproduction_targets() {
  static const std::vector<std::string> targets{"table-accuracy", "table-costs", "figure-kernels",
                                                "figure-strategies", "appendix-noisy"};
  return targets;
}

std::vector<AccuracyCell> accuracy_experiment(const ExperimentConfig& base, const std::vector<std::size_t>& sizes,
                                              const std::vector<std::uint64_t>& seeds, int jobs) {
  require(!sizes.empty() && !seeds.empty(), "accuracy_experiment: sizes and seeds must be nonempty");
  const TimeGrid grid = base.grid();
  const std::size_t n_max = *std::max_element(sizes.begin(), sizes.end());
  const std::vector<std::string> kinds{"power_law", "exponential"};
  std::vector<std::vector<AccuracyCell>> per_job(kinds.size() * seeds.size());
  parallel_for(per_job.size(), jobs, [&](std::size_t idx) {
    const std::string& kind = kinds[idx / seeds.size()];
    const std::uint64_t seed = seeds[idx % seeds.size()];
    const KernelSpec spec = accuracy_kernel(kind, base);
    const Propagator<double> g_star = spec.propagator(grid);
    const VectorXd k_star = g_star.entries().col(0);
    const Dataset full = generate_dataset(base.dataset.mix, g_star, base.dataset.signal, n_max, grid, seed);
    EstimationConfig cfg = base.estimation;
    cfg.mode = EstimationMode::convolution;
    for (std::size_t n : sizes) {
      const EstimationResult est = estimate(prefix(full, n), cfg);
      const RelativeErrors e = relative_errors(k_star, est.unconstrained.col(0), est.projected.col(0));
      per_job[idx].push_back(AccuracyCell{kind, n, seed, e.err, e.err_proj, est.converged});
    }
  });
  std::vector<AccuracyCell> cells;
  for (const auto& v : per_job) cells.insert(cells.end(), v.begin(), v.end());
  return cells;
}

CostComparison cost_comparison(const ExperimentConfig& config, std::uint64_t seed) {
  const TimeGrid grid = config.grid();
  const Propagator<double> g_star = config.kernel.propagator(grid);
  const Dataset data = generate_dataset(config.dataset.mix, g_star, config.dataset.signal, config.dataset.episodes,
                                        grid, seed, config.jobs);
  EstimationConfig ecfg = config.estimation;
  ecfg.mode = EstimationMode::volterra;
  CostComparison c;
  c.estimation = estimate(data, ecfg);
  const auto m = static_cast<Eigen::Index>(grid.size());
  const VectorXd zero = VectorXd::Zero(m);
  const SignalPath path = zero_path(grid);
  const double x0 = config.control.x0;

  c.optimal_strategy = optimal_strategy(g_star, SignalModel::zero(), path, x0);
  c.greedy_strategy = greedy_strategy(c.estimation.projected, SignalModel::zero(), path, x0);
  PessimisticConfig pc = config.control.pessimism;
  pc.noise_scale = c.estimation.noise_scale;
  if (pc.confidence < 0.0) pc.confidence = c.estimation.confidence;
  c.pessimistic_strategy = pessimistic_strategy_volterra(c.estimation.projected, c.estimation.gram, pc, zero, x0);
  c.optimal = cost(c.optimal_strategy.u, g_star.entries(), zero);
  c.greedy = cost(c.greedy_strategy.u, g_star.entries(), zero);
  c.pessimistic = cost(c.pessimistic_strategy.u, g_star.entries(), zero);
  return c;
}

std::vector<std::string> reproduce(const std::string& target, const ExperimentConfig& config,
                                   const std::string& out_dir, int jobs) {
  ensure_directory(out_dir);
  const TimeGrid grid = config.grid();
  std::vector<std::string> written;
  auto record = [&](const std::string& name) {
    written.push_back(out_dir + "/" + name);
    return out_dir + "/" + name;
  };
  json run{{"target", target}, {"config", to_json(config)}, {"jobs", jobs}};

  if (target == "table-accuracy") {
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t k = 0; k < 5; ++k) seeds.push_back(config.dataset.seed + k);
    const std::vector<std::size_t> sizes{63, 126, 252};
    const auto cells = accuracy_experiment(config, sizes, seeds, jobs);
    Table t{{"source", "kernel", "N", "seed", "err", "err_proj"}, {}};
    std::map<std::pair<std::string, std::size_t>, std::vector<const AccuracyCell*>> groups;
    for (const auto& c : cells) {
      t.add({"computed", c.kernel, std::to_string(c.episodes), std::to_string(c.seed), str(c.err), str(c.err_proj)});
      groups[{c.kernel, c.episodes}].push_back(&c);
    }
    for (const auto& [key, group] : groups) {
      std::vector<double> e, p;
      for (const auto* c : group) {
        e.push_back(c->err);
        p.push_back(c->err_proj);
      }
      t.add({"median", key.first, std::to_string(key.second), "", str(median(e)), str(median(p))});
    }
    for (const auto& r : kAccuracyReference) {
      t.add({"reference", "power_law", std::to_string(r.n), "", str(r.err_power), str(r.proj_power)});
      t.add({"reference", "exponential", std::to_string(r.n), "", str(r.err_exp), str(r.proj_exp)});
    }
    run["seeds"] = seeds;
    t.write(record("table_accuracy.csv"));
  } else if (target == "table-costs" || target == "figure-strategies") {
    const CostComparison c = cost_comparison(config, config.dataset.seed);
    if (target == "table-costs") {
      Table t{{"source", "strategy", "cost"}, {}};
      t.add({"computed", "optimal", str(c.optimal)});
      t.add({"computed", "greedy", str(c.greedy)});
      t.add({"computed", "pessimistic", str(c.pessimistic)});
      t.add({"reference", "optimal", str(kReferenceOptimal)});
      t.add({"reference", "greedy", str(kReferenceGreedy)});
      t.add({"reference", "pessimistic", str(kReferencePessimistic)});
      t.write(record("table_costs.csv"));
      run["gap_ratio"] = c.gap_ratio();
    } else {
      Table t{{"strategy", "step", "t", "u", "inventory"}, {}};
      for (const auto* s : {&c.optimal_strategy, &c.greedy_strategy, &c.pessimistic_strategy}) {
        double remaining = s->x0;
        for (Eigen::Index i = 0; i < s->u.size(); ++i) {
          remaining -= s->u(i);
          t.add({to_string(s->kind), std::to_string(i), str(grid.time(static_cast<std::size_t>(i))), str(s->u(i)),
                 str(remaining)});
        }
      }
      t.write(record("figure_strategies.csv"));
    }
    run["seed"] = config.dataset.seed;
  } else if (target == "figure-kernels") {
    Table t{{"kernel", "parameter", "lag", "t", "true", "estimate"}, {}};
    struct Job {
      std::string kind;
      double param;
    };
    std::vector<Job> jobs_list;
    for (double p : {0.1, 0.2, 0.3, 0.4}) jobs_list.push_back({"power_law", p});
    for (double p : {0.1, 0.2, 0.3, 0.4}) jobs_list.push_back({"exponential", p});
    std::vector<std::pair<VectorXd, VectorXd>> results(jobs_list.size());
    parallel_for(jobs_list.size(), jobs, [&](std::size_t k) {
      KernelSpec spec = config.kernel;
      spec.kind = jobs_list[k].kind;
      if (spec.kind == "power_law") spec.beta = jobs_list[k].param;
      else spec.rho = jobs_list[k].param;
      const Propagator<double> g_star = spec.propagator(grid);
      const Dataset d = generate_dataset(config.dataset.mix, g_star, config.dataset.signal, config.dataset.episodes,
                                         grid, config.dataset.seed);
      EstimationConfig cfg = config.estimation;
      cfg.mode = EstimationMode::convolution;
      results[k] = {g_star.entries().col(0), estimate(d, cfg).projected.col(0)};
    });
    for (std::size_t k = 0; k < jobs_list.size(); ++k) {
      for (Eigen::Index j = 0; j < results[k].first.size(); ++j) {
        t.add({jobs_list[k].kind, str(jobs_list[k].param), std::to_string(j),
               str(grid.lag(static_cast<std::size_t>(j))), str(results[k].first(j)), str(results[k].second(j))});
      }
    }
    t.write(record("figure_kernels.csv"));
  } else if (target == "appendix-noisy") {
    KernelSpec spec = config.kernel;
    const Propagator<double> g_star = spec.propagator(grid);
    const Dataset d = generate_noisy_dataset(config.dataset.speed_mean, config.dataset.speed_stddev,
                                             config.dataset.episodes, grid, config.dataset.seed, g_star,
                                             config.dataset.mix.sigma_price, config.dataset.mix.initial_price, jobs);
    EstimationConfig cfg = config.estimation;
    cfg.mode = EstimationMode::volterra;
    const EstimationResult est = estimate(d, cfg);
    Table t{{"i", "j", "true", "estimate", "relative_error"}, {}};
    std::vector<double> rel;
    for (Eigen::Index i = 0; i < est.projected.rows(); ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double truth = g_star.entries()(i, j);
        const double r = std::abs(est.projected(i, j) - truth) / truth;
        rel.push_back(r);
        t.add({std::to_string(i), std::to_string(j), str(truth), str(est.projected(i, j)), str(r)});
      }
    }
    t.write(record("appendix_noisy.csv"));
    run["max_relative_error"] = *std::max_element(rel.begin(), rel.end());
    run["median_relative_error"] = median(rel);
    run["projection_iterations"] = est.iterations;
    run["projection_converged"] = est.converged;
  } else {
    throw ValidationError("unknown reproduction target: " + target);
  }
  write_json(record("run.json"), run);
  return written;
}

}  // namespace proplab
