#include "proplab/evaluation.hpp"

#include "proplab/parallel.hpp"
#include "proplab/rng.hpp"

#include <algorithm>
#include <cmath>

namespace proplab {

CostReport execution_cost(const VectorXd& u, const MatrixXd& g, const VectorXd& signal, double penalty,
                          std::string context) {
  const Eigen::Index m = u.size();
  require(g.rows() == m && g.cols() == m && signal.size() == m, "execution_cost: dimension mismatch");
  CostReport r;
  for (Eigen::Index i = 0; i < m; ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j <= i; ++j) row += g(i, j) * u(j);
    r.impact_cost += row * u(i);
  }
  r.signal_cost = signal.dot(u);
  r.penalty = penalty;
  r.total = r.impact_cost + r.signal_cost + r.penalty;
  r.context = std::move(context);
  return r;
}

double cost(const VectorXd& u, const MatrixXd& g, const VectorXd& signal) {
  return execution_cost(u, g, signal).total;
}

RegretReport suboptimality_decomposition(const VectorXd& u_hat, const VectorXd& u_ref, const MatrixXd& g_star,
                                         const MatrixXd& g_est, const VectorXd& signal, const PenaltyFn& penalty) {
  auto pen = [&](const VectorXd& u) { return penalty ? penalty(u) : 0.0; };
  const double true_hat = cost(u_hat, g_star, signal);
  const double true_ref = cost(u_ref, g_star, signal);
  const double est_hat = cost(u_hat, g_est, signal) + pen(u_hat);
  const double est_ref = cost(u_ref, g_est, signal) + pen(u_ref);
  RegretReport r;
  r.suboptimality = true_hat - true_ref;
  r.spurious_correlation = true_hat - est_hat;
  r.intrinsic_uncertainty = est_ref - true_ref;
  r.optimization_error = est_hat - est_ref;
  r.bound = 2.0 * pen(u_ref);
  r.held = r.suboptimality <= r.bound;
  return r;
}

double regret_bound(const VectorXd& u_ref, const PenaltyFn& penalty) { return penalty ? 2.0 * penalty(u_ref) : 0.0; }

double regret_bound(const std::vector<VectorXd>& u_refs, const PenaltyFn& penalty) {
  require(!u_refs.empty(), "regret_bound: no reference strategies");
  double sum = 0.0;
  for (const auto& u : u_refs) sum += regret_bound(u, penalty);
  return sum / static_cast<double>(u_refs.size());
}

RelativeErrors relative_errors(const VectorXd& k_star, const VectorXd& k_tilde, const VectorXd& k_proj) {
  require(k_star.size() == k_tilde.size() && k_star.size() == k_proj.size(), "relative_errors: size mismatch");
  require(k_star.size() > 0 && k_star.minCoeff() > 0.0, "relative_errors: true kernel must be strictly positive");
  RelativeErrors r;
  r.err = ((k_star - k_tilde).cwiseAbs().array() / k_star.array()).maxCoeff();
  r.err_proj = ((k_star - k_proj).cwiseAbs().array() / k_star.array()).maxCoeff();
  return r;
}

double median(std::vector<double> values) {
  require(!values.empty(), "median: no values");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

TimeGrid small_grid(const SmallScenario& s) { return TimeGrid(s.steps, s.horizon); }

MatrixXd small_truth(const SmallScenario& s) {
  return toeplitz_lower(power_law_kernel(s.kappa, s.beta, small_grid(s)).values());
}

double binomial_se(double p, std::size_t n) { return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n)); }

double assumed_noise(const SmallScenario& s) {
  return s.assumed_noise_scale >= 0.0 ? s.assumed_noise_scale : s.noise_scale;
}

}  // namespace

Dataset small_scenario_dataset(const SmallScenario& scenario, std::size_t trial) {
  const TimeGrid grid = small_grid(scenario);
  const MatrixXd g_star = small_truth(scenario);
  const auto m = static_cast<Eigen::Index>(grid.size());
  const std::uint64_t trial_seed = derive_seed(scenario.seed, trial);
  Dataset d;
  d.grid = grid;
  for (std::size_t n = 0; n < scenario.episodes; ++n) {
    Rng rng(derive_seed(trial_seed, n));
    std::normal_distribution<double> normal(0.0, 1.0);
    Episode e;
    e.u.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) e.u(i) = scenario.speed_mean + scenario.speed_stddev * normal(rng);
    e.A = VectorXd::Zero(m);
    e.y.resize(m);
    e.S.resize(m + 1);
    e.S(0) = 0.0;
    const VectorXd impact = g_star.triangularView<Eigen::Lower>() * e.u;
    for (Eigen::Index i = 0; i < m; ++i) {
      e.S(i + 1) = impact(i) + scenario.noise_scale * normal(rng);
      e.y(i) = e.S(i + 1) - e.S(0) - e.A(i);
    }
    d.episodes.push_back(std::move(e));
  }
  d.provenance.generator = "gaussian";
  d.provenance.seed = trial_seed;
  d.provenance.noise_scale = scenario.noise_scale;
  d.provenance.mix.sigma_price = 0.0;
  d.provenance.mix.initial_price = 0.0;
  d.provenance.speed_mean = scenario.speed_mean;
  d.provenance.speed_stddev = scenario.speed_stddev;
  d.provenance.signal = OUParams{0.0, 0.0, 0.0};
  d.provenance.true_propagator = g_star;
  return d;
}

CoverageReport coverage_experiment(const SmallScenario& scenario, EstimationMode mode, std::size_t trials,
                                   double delta, int jobs) {
  require(trials >= 1, "coverage_experiment: need at least one trial");
  require(delta > 0.0 && delta < 1.0, "coverage_experiment: delta must lie in (0, 1)");
  const TimeGrid grid = small_grid(scenario);
  const VectorXd k_star = power_law_kernel(scenario.kappa, scenario.beta, grid).values();
  const MatrixXd g_star = toeplitz_lower(k_star);
  const auto m = static_cast<double>(grid.size());

  std::vector<int> violated(trials, 0), tail_violated(trials, 0);
  std::vector<double> ratios(trials, 0.0);
  parallel_for(trials, jobs, [&](std::size_t t) {
    const Dataset d = small_scenario_dataset(scenario, t);
    EstimationConfig cfg;
    cfg.mode = mode;
    cfg.lambda = scenario.lambda;
    cfg.kappa = scenario.kappa;
    cfg.delta = delta;
    cfg.noise_scale = assumed_noise(scenario);
    cfg.kernel_bound = mode == EstimationMode::volterra ? g_star.norm() : k_star.norm();
    const EstimationResult est = estimate(d, cfg);
    const double log_delta = 2.0 * std::log(1.0 / delta);
    double error = 0.0;
    double tail = 0.0;
    double tail_bound = 0.0;
    if (mode == EstimationMode::volterra) {
      error = weighted_distance_volterra(est.projected, g_star, est.gram);
      MatrixXd s = MatrixXd::Zero(g_star.rows(), g_star.rows());
      for (const auto& e : d.episodes) s += price_noise(e, g_star) * e.u.transpose();
      tail = (s * est.gram.inv_sqrt_factor).norm();
      tail_bound = assumed_noise(scenario) *
                   std::sqrt(m * est.gram.log_det - m * m * std::log(est.gram.lambda) + log_delta);
    } else {
      error = weighted_distance_convolution(VectorXd(est.projected.col(0)), k_star, est.gram);
      VectorXd s = VectorXd::Zero(k_star.size());
      for (const auto& e : d.episodes) s += toeplitz_of_strategy(e.u).transpose() * price_noise(e, g_star);
      tail = (est.gram.inv_sqrt_factor * s).norm();
      tail_bound = assumed_noise(scenario) * std::sqrt(est.gram.log_det - m * std::log(est.gram.lambda) + log_delta);
    }
    ratios[t] = error / est.confidence;
    violated[t] = error > est.confidence ? 1 : 0;
    tail_violated[t] = tail > tail_bound ? 1 : 0;
  });

  CoverageReport r;
  r.mode = mode;
  r.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    r.violations += static_cast<std::size_t>(violated[t]);
    r.tail_violations += static_cast<std::size_t>(tail_violated[t]);
  }
  r.frequency = 1.0 - static_cast<double>(r.violations) / static_cast<double>(trials);
  r.standard_error = binomial_se(r.frequency, trials);
  r.target = 1.0 - delta;
  r.ratios = std::move(ratios);
  return r;
}

RegretExperimentReport regret_experiment(const SmallScenario& scenario, std::size_t trials, double delta, int jobs) {
  require(trials >= 1, "regret_experiment: need at least one trial");
  const TimeGrid grid = small_grid(scenario);
  const MatrixXd g_star = small_truth(scenario);
  const auto m = static_cast<Eigen::Index>(grid.size());
  const VectorXd zero_signal = VectorXd::Zero(m);
  const VectorXd u_star = ow_closed_form(g_star, scenario.x0).u;

  struct Outcome {
    RegretReport report;
    bool event = false;
    bool quantifier_violation = false;
  };
  std::vector<Outcome> outcomes(trials);
  parallel_for(trials, jobs, [&](std::size_t t) {
    const Dataset d = small_scenario_dataset(scenario, t);
    EstimationConfig cfg;
    cfg.mode = EstimationMode::volterra;
    cfg.lambda = scenario.lambda;
    cfg.kappa = scenario.kappa;
    cfg.delta = delta;
    cfg.noise_scale = assumed_noise(scenario);
    cfg.kernel_bound = g_star.norm();
    const EstimationResult est = estimate(d, cfg);

    PessimisticConfig pc;
    pc.delta = delta;
    pc.noise_scale = assumed_noise(scenario);
    pc.kernel_bound = cfg.kernel_bound;
    pc.confidence = est.confidence;
    const PessimisticConstants k = resolve_volterra_constants(est.projected, est.gram, pc, scenario.x0);
    const Strategy u_hat = pessimistic_strategy_volterra(est.projected, est.gram, pc, zero_signal, scenario.x0);
    const PenaltyFn l1 = [&](const VectorXd& u) { return penalty_l1(u, est.gram, k.confidence, k.strategy_bound); };

    Outcome& o = outcomes[t];
    o.report = suboptimality_decomposition(u_hat.u, u_star, g_star, est.projected, zero_signal, l1);
    o.event = weighted_distance_volterra(est.projected, g_star, est.gram) <= est.confidence;

    // Probe the uncertainty quantifier on a few fuel-feasible strategies.
    std::vector<VectorXd> probes{u_hat.u, u_star, VectorXd::Constant(m, scenario.x0 / static_cast<double>(m))};
    Rng rng(derive_seed(scenario.seed ^ 0x5eedULL, t));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int p = 0; p < 3; ++p) {
      VectorXd u(m);
      for (Eigen::Index i = 0; i < m; ++i) u(i) = normal(rng);
      u.array() += (scenario.x0 - u.sum()) / static_cast<double>(m);
      probes.push_back(u);
    }
    for (const auto& u : probes) {
      const double gap = std::abs(cost(u, g_star, zero_signal) - cost(u, est.projected, zero_signal));
      if (o.event && u.norm() <= k.strategy_bound && gap > l1(u) * (1.0 + 1e-9) + 1e-12) o.quantifier_violation = true;
    }
  });

  RegretExperimentReport r;
  r.trials = trials;
  for (const auto& o : outcomes) {
    r.bound_held += o.report.held ? 1 : 0;
    r.event_held += o.event ? 1 : 0;
    if (o.event && o.report.spurious_correlation > 1e-6) ++r.spurious_violations;
    if (o.quantifier_violation) ++r.quantifier_violations;
    r.reports.push_back(o.report);
  }
  r.frequency = static_cast<double>(r.bound_held) / static_cast<double>(trials);
  r.standard_error = binomial_se(r.frequency, trials);
  return r;
}

Propagator<double> scenario_propagator(const MarketScenario& s) {
  const TimeGrid grid(s.steps, s.horizon);
  if (s.kernel == "power_law") return toeplitz_embed(power_law_kernel(s.kappa, s.beta, grid), std::optional<double>(s.kappa));
  if (s.kernel == "exponential") return toeplitz_embed(exponential_kernel(s.kappa, s.rho, grid), std::optional<double>(s.kappa));
  throw ValidationError("unknown kernel kind: " + s.kernel);
}

RateReport rate_experiment(const MarketScenario& scenario, const std::vector<std::size_t>& sizes, double delta,
                           const std::vector<std::uint64_t>& seeds, int jobs) {
  require(sizes.size() >= 3, "rate_experiment: need at least three sample sizes");
  require(!seeds.empty(), "rate_experiment: need at least one seed");
  const TimeGrid grid(scenario.steps, scenario.horizon);
  const Propagator<double> g_star = scenario_propagator(scenario);
  const VectorXd k_star = g_star.entries().col(0);
  const VectorXd u_star = ow_closed_form(g_star.entries(), scenario.x0).u;
  const std::size_t n_max = *std::max_element(sizes.begin(), sizes.end());

  RateReport r;
  r.sizes = sizes;
  r.bounds.assign(seeds.size(), std::vector<double>(sizes.size(), 0.0));
  r.slopes.assign(seeds.size(), 0.0);
  r.fitted_constants.assign(seeds.size(), 0.0);
  std::vector<std::vector<double>> closed(seeds.size(), std::vector<double>(sizes.size(), 0.0));
  const double m = static_cast<double>(grid.size());
  const double strategy_bound = 10.0 * scenario.x0 * std::sqrt(m);
  parallel_for(seeds.size(), jobs, [&](std::size_t k) {
    const Dataset full = generate_dataset(scenario.mix, g_star, scenario.signal, n_max, grid, seeds[k]);
    const ConcentrationReport conc = concentration_check(full, ConcentrationMode::toeplitz, delta);
    const double c_delta = conc.fitted_constant;
    r.fitted_constants[k] = c_delta;
    const double noise = full.provenance.noise_scale;
    const double xi_min = conc.min_eigenvalue, xi_max = conc.max_eigenvalue;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const std::size_t n = sizes[i];
      std::vector<VectorXd> speeds;
      for (std::size_t e = 0; e < n; ++e) speeds.push_back(full.episodes[e].u);
      const double lambda = c_delta * std::sqrt(static_cast<double>(n));
      const GramInfo w = gram_convolution(speeds, static_cast<Eigen::Index>(grid.size()), lambda);
      const double c_n = confidence_constant_convolution(w, full.provenance.noise_scale, delta, k_star.norm());
      const double bound = 2.0 * penalty_l2(u_star, w, c_n, strategy_bound);
      r.bounds[k][i] = bound;
      const double l2 = strategy_bound * strategy_bound;
      const double c1 = 2.0 * noise / std::sqrt(xi_min) * l2 * m *
                        std::sqrt(std::log(static_cast<double>(n) / (delta * delta) * (1.0 + xi_max / (2.0 * c_delta))));
      const double c2 = 2.0 / xi_min * l2 * k_star.norm() * c_delta * m;
      closed[k][i] = (c1 + c2) / std::sqrt(static_cast<double>(n));
      xs.push_back(static_cast<double>(n));
      ys.push_back(bound);
    }
    r.slopes[k] = log_log_slope(xs, ys);
  });
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    std::vector<double> col;
    for (const auto& row : r.bounds) col.push_back(row[i]);
    r.median_bounds.push_back(median(col));
    std::vector<double> cf;
    for (const auto& row : closed) cf.push_back(row[i]);
    r.median_closed_form.push_back(median(cf));
  }
  r.median_slope = median(r.slopes);
  std::vector<double> xs(sizes.begin(), sizes.end());
  r.closed_form_slope = log_log_slope(xs, r.median_closed_form);
  return r;
}

}  // namespace proplab
