#include "proplab/config.hpp"

#include "proplab/io.hpp"

#include <set>

namespace proplab {

using nlohmann::json;

ConvolutionKernel<double> KernelSpec::kernel(const TimeGrid& grid) const {
  if (kind == "power_law") return power_law_kernel(kappa, beta, grid);
  if (kind == "exponential") return exponential_kernel(kappa, rho, grid);
  throw ValidationError("unknown kernel kind: " + kind);
}

Propagator<double> KernelSpec::propagator(const TimeGrid& grid) const {
  return toeplitz_embed(kernel(grid), std::optional<double>(kappa));
}

void ExperimentConfig::validate() const {
  require(steps >= 1, "config: steps must be at least 1");
  require(horizon > 0.0, "config: horizon must be positive");
  require(dataset.episodes >= 1, "config: dataset.episodes must be at least 1");
  require(dataset.generator == "trader_mix" || dataset.generator == "noisy",
          "config: dataset.generator must be trader_mix or noisy");
  require(dataset.speed_stddev >= 0.0, "config: dataset.speed_stddev must be nonnegative");
  dataset.mix.validate();
  require(dataset.signal.mu >= 0.0 && dataset.signal.sigma >= 0.0, "config: signal mu and sigma must be nonnegative");
  require(estimation.lambda > 0.0, "config: estimation.lambda must be positive");
  require(estimation.delta > 0.0 && estimation.delta < 1.0, "config: estimation.delta must lie in (0, 1)");
  require(estimation.kappa >= 0.0, "config: estimation.kappa must be nonnegative");
  require(control.signal == "zero" || control.signal == "ou", "config: control.signal must be zero or ou");
  control.pessimism.validate();
  require(jobs >= 1, "config: jobs must be at least 1");
  (void)kernel.propagator(grid());
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  require(j.is_object(), "config: " + where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    require(allowed.count(it.key()) == 1, "config: unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json range_json(const UniformRange& r) { return json::array({r.lo, r.hi}); }

void read_range(const json& j, const char* key, UniformRange& r) {
  if (!j.contains(key)) return;
  const json& a = j.at(key);
  require(a.is_array() && a.size() == 2, std::string("config: ") + key + " must be [lo, hi]");
  r.lo = a.at(0).get<double>();
  r.hi = a.at(1).get<double>();
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  const TraderMixConfig& m = c.dataset.mix;
  const PessimisticConfig& p = c.control.pessimism;
  return json{
      {"scenario", c.scenario},
      {"kernel", {{"kind", c.kernel.kind}, {"kappa", c.kernel.kappa}, {"beta", c.kernel.beta}, {"rho", c.kernel.rho}}},
      {"grid", {{"M", c.steps}, {"T", c.horizon}}},
      {"dataset",
       {{"generator", c.dataset.generator},
        {"N", c.dataset.episodes},
        {"seed", c.dataset.seed},
        {"inventory", range_json(m.inventory)},
        {"rho_jitter", range_json(m.rho_jitter)},
        {"kappa_jitter", range_json(m.kappa_jitter)},
        {"mu_jitter", range_json(m.mu_jitter)},
        {"base_kappa", m.base_kappa},
        {"base_rho", m.base_rho},
        {"base_mu", m.base_mu},
        {"weights", json::array({m.weight_twap, m.weight_ow, m.weight_trend})},
        {"sigma_price", m.sigma_price},
        {"initial_price", m.initial_price},
        {"signal", {{"mu", c.dataset.signal.mu}, {"sigma", c.dataset.signal.sigma}, {"i0", c.dataset.signal.i0}}},
        {"speed_mean", c.dataset.speed_mean},
        {"speed_stddev", c.dataset.speed_stddev}}},
      {"estimation",
       {{"mode", to_string(c.estimation.mode)},
        {"lambda", c.estimation.lambda},
        {"kappa", c.estimation.kappa},
        {"delta", c.estimation.delta},
        {"R", c.estimation.noise_scale},
        {"kernel_bound", c.estimation.kernel_bound},
        {"tolerance", c.estimation.projection.tolerance},
        {"max_iterations", c.estimation.projection.max_iterations}}},
      {"control",
       {{"x0", c.control.x0},
        {"signal", c.control.signal},
        {"signal_seed", c.control.signal_seed},
        {"delta", p.delta},
        {"strategy_bound", p.strategy_bound},
        {"kernel_bound", p.kernel_bound},
        {"confidence", p.confidence},
        {"smoothing", p.smoothing},
        {"tolerance", p.tolerance},
        {"max_iterations", p.max_iterations}}},
      {"output_dir", c.output_dir},
      {"jobs", c.jobs},
  };
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    check_keys(j, {"scenario", "kernel", "grid", "dataset", "estimation", "control", "output_dir", "jobs"}, "root");
    read(j, "scenario", c.scenario);
    read(j, "output_dir", c.output_dir);
    read(j, "jobs", c.jobs);
    if (j.contains("kernel")) {
      const json& k = j.at("kernel");
      check_keys(k, {"kind", "kappa", "beta", "rho"}, "kernel");
      read(k, "kind", c.kernel.kind);
      read(k, "kappa", c.kernel.kappa);
      read(k, "beta", c.kernel.beta);
      read(k, "rho", c.kernel.rho);
    }
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      check_keys(g, {"M", "T"}, "grid");
      read(g, "M", c.steps);
      read(g, "T", c.horizon);
    }
    if (j.contains("dataset")) {
      const json& d = j.at("dataset");
      check_keys(d,
                 {"generator", "N", "seed", "inventory", "rho_jitter", "kappa_jitter", "mu_jitter", "base_kappa",
                  "base_rho", "base_mu", "weights", "sigma_price", "initial_price", "signal", "speed_mean",
                  "speed_stddev"},
                 "dataset");
      TraderMixConfig& m = c.dataset.mix;
      read(d, "generator", c.dataset.generator);
      read(d, "N", c.dataset.episodes);
      read(d, "seed", c.dataset.seed);
      read_range(d, "inventory", m.inventory);
      read_range(d, "rho_jitter", m.rho_jitter);
      read_range(d, "kappa_jitter", m.kappa_jitter);
      read_range(d, "mu_jitter", m.mu_jitter);
      read(d, "base_kappa", m.base_kappa);
      read(d, "base_rho", m.base_rho);
      read(d, "base_mu", m.base_mu);
      if (d.contains("weights")) {
        const json& w = d.at("weights");
        require(w.is_array() && w.size() == 3, "config: dataset.weights must have three entries");
        m.weight_twap = w.at(0).get<double>();
        m.weight_ow = w.at(1).get<double>();
        m.weight_trend = w.at(2).get<double>();
      }
      read(d, "sigma_price", m.sigma_price);
      read(d, "initial_price", m.initial_price);
      if (d.contains("signal")) {
        const json& s = d.at("signal");
        check_keys(s, {"mu", "sigma", "i0"}, "dataset.signal");
        read(s, "mu", c.dataset.signal.mu);
        read(s, "sigma", c.dataset.signal.sigma);
        read(s, "i0", c.dataset.signal.i0);
      }
      read(d, "speed_mean", c.dataset.speed_mean);
      read(d, "speed_stddev", c.dataset.speed_stddev);
    }
    if (j.contains("estimation")) {
      const json& e = j.at("estimation");
      check_keys(e, {"mode", "lambda", "kappa", "delta", "R", "kernel_bound", "tolerance", "max_iterations"},
                 "estimation");
      if (e.contains("mode")) c.estimation.mode = estimation_mode_from_string(e.at("mode").get<std::string>());
      read(e, "lambda", c.estimation.lambda);
      read(e, "kappa", c.estimation.kappa);
      read(e, "delta", c.estimation.delta);
      read(e, "R", c.estimation.noise_scale);
      read(e, "kernel_bound", c.estimation.kernel_bound);
      read(e, "tolerance", c.estimation.projection.tolerance);
      read(e, "max_iterations", c.estimation.projection.max_iterations);
    }
    if (j.contains("control")) {
      const json& k = j.at("control");
      check_keys(k,
                 {"x0", "signal", "signal_seed", "delta", "strategy_bound", "kernel_bound", "confidence", "smoothing",
                  "tolerance", "max_iterations"},
                 "control");
      PessimisticConfig& p = c.control.pessimism;
      read(k, "x0", c.control.x0);
      read(k, "signal", c.control.signal);
      read(k, "signal_seed", c.control.signal_seed);
      read(k, "delta", p.delta);
      read(k, "strategy_bound", p.strategy_bound);
      read(k, "kernel_bound", p.kernel_bound);
      read(k, "confidence", p.confidence);
      read(k, "smoothing", p.smoothing);
      read(k, "tolerance", p.tolerance);
      read(k, "max_iterations", p.max_iterations);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) { return config_from_json(read_json(path)); }

Dataset generate_from_config(const ExperimentConfig& c) {
  const TimeGrid grid = c.grid();
  const Propagator<double> g_star = c.kernel.propagator(grid);
  if (c.dataset.generator == "noisy") {
    return generate_noisy_dataset(c.dataset.speed_mean, c.dataset.speed_stddev, c.dataset.episodes, grid,
                                  c.dataset.seed, g_star, c.dataset.mix.sigma_price, c.dataset.mix.initial_price,
                                  c.jobs);
  }
  return generate_dataset(c.dataset.mix, g_star, c.dataset.signal, c.dataset.episodes, grid, c.dataset.seed, c.jobs);
}

}  // namespace proplab
