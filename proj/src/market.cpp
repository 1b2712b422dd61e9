#include "proplab/market.hpp"

#include "proplab/execution.hpp"
#include "proplab/parallel.hpp"
#include "proplab/rng.hpp"

#include <cmath>

namespace proplab {

void TraderMixConfig::validate() const {
  require(inventory.lo <= inventory.hi, "TraderMixConfig: inventory range must satisfy lo <= hi");
  for (const auto* r : {&rho_jitter, &kappa_jitter, &mu_jitter}) {
    require(r->lo > 0.0 && r->lo <= r->hi, "TraderMixConfig: jitter ranges must be positive with lo <= hi");
  }
  require(base_kappa > 0.0 && base_rho >= 0.0 && base_mu > 0.0,
          "TraderMixConfig: base kappa and mu must be positive, rho nonnegative");
  require(sigma_price >= 0.0, "TraderMixConfig: price noise must be nonnegative");
}

Strategy twap_strategy(double x0, std::size_t steps) {
  require(steps >= 1, "twap_strategy: at least one period is required");
  const auto m = static_cast<Eigen::Index>(steps);
  Strategy s;
  s.u = VectorXd::Constant(m, x0 / static_cast<double>(steps));
  s.u(m - 1) = x0 - s.u.head(m - 1).sum();
  s.x0 = x0;
  s.kind = StrategyKind::reference;
  return s;
}

Strategy ow_strategy(const Propagator<double>& g, double x0) { return ow_closed_form(g.entries(), x0); }

Strategy trend_follower_strategy(const VectorXd& expected_return, double kappa_hat, double mu_hat,
                                 const TimeGrid& grid) {
  require(kappa_hat > 0.0 && mu_hat > 0.0, "trend_follower_strategy: parameters must be positive");
  require(expected_return.size() == static_cast<Eigen::Index>(grid.size()),
          "trend_follower_strategy: signal length does not match the grid");
  Strategy s;
  s.u.resize(expected_return.size());
  for (Eigen::Index i = 0; i < s.u.size(); ++i) {
    const double remaining = grid.horizon() - grid.time(static_cast<std::size_t>(i));
    s.u(i) = expected_return(i) / (2.0 * mu_hat * kappa_hat) * (-std::expm1(-mu_hat * remaining));
  }
  s.x0 = s.u.sum();
  s.fuel_constrained = false;
  return s;
}

std::uint64_t episode_seed(std::uint64_t master, std::size_t episode) { return derive_seed(master, episode); }

TraderComponents trader_components(const TraderMixConfig& config, const OUParams& signal, const TimeGrid& grid,
                                   std::uint64_t seed) {
  Rng rng(derive_seed(seed, 2));
  auto uniform = [&rng](const UniformRange& r) { return std::uniform_real_distribution<double>(r.lo, r.hi)(rng); };
  const double x_twap = uniform(config.inventory);
  const double x_ow = uniform(config.inventory);
  const double rho_hat = config.base_rho * uniform(config.rho_jitter);
  const double kappa_ow = config.base_kappa * uniform(config.kappa_jitter);
  const double kappa_trend = config.base_kappa * uniform(config.kappa_jitter);
  const double mu_hat = config.base_mu * uniform(config.mu_jitter);

  TraderComponents c;
  c.signal = simulate_ou(signal, grid, derive_seed(seed, 0));
  c.twap = config.weight_twap * twap_strategy(x_twap, grid.size()).u;
  const MatrixXd g_ow = toeplitz_lower(exponential_kernel(kappa_ow, rho_hat, grid).values());
  c.ow = config.weight_ow * ow_closed_form(g_ow, x_ow).u;
  c.trend = config.weight_trend * trend_follower_strategy(c.signal.I, kappa_trend, mu_hat, grid).u;
  return c;
}

Episode make_episode(const MatrixXd& g_star, const VectorXd& u, const VectorXd& signal_a, double sigma_price,
                     double initial_price, const TimeGrid& grid, std::uint64_t noise_seed) {
  const auto m = static_cast<Eigen::Index>(grid.size());
  require(u.size() == m && signal_a.size() == m && g_star.rows() == m, "make_episode: dimension mismatch");
  Rng rng(noise_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sqrt_dt = std::sqrt(grid.spacing());
  const VectorXd impact = g_star.triangularView<Eigen::Lower>() * u;

  Episode e;
  e.u = u;
  e.A = signal_a;
  e.S.resize(m + 1);
  e.y.resize(m);
  e.S(0) = initial_price;
  double w = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (i > 0) w += sqrt_dt * normal(rng);
    e.S(i + 1) = impact(i) + initial_price + signal_a(i) + sigma_price * w;
    e.y(i) = e.S(i + 1) - e.S(0) - e.A(i);
  }
  return e;
}

Dataset generate_dataset(const TraderMixConfig& config, const Propagator<double>& g_star, const OUParams& signal,
                         std::size_t episodes, const TimeGrid& grid, std::uint64_t seed, int jobs) {
  config.validate();
  require(g_star.size() == static_cast<Eigen::Index>(grid.size()), "generate_dataset: propagator size mismatch");
  Dataset d;
  d.grid = grid;
  d.episodes.resize(episodes);
  parallel_for(episodes, jobs, [&](std::size_t n) {
    const std::uint64_t s = episode_seed(seed, n);
    const TraderComponents c = trader_components(config, signal, grid, s);
    const VectorXd u = c.twap + c.ow + c.trend;
    d.episodes[n] = make_episode(g_star.entries(), u, c.signal.A, config.sigma_price, config.initial_price, grid,
                                 derive_seed(s, 1));
  });
  d.provenance.generator = "trader_mix";
  d.provenance.seed = seed;
  d.provenance.noise_scale = config.sigma_price * std::sqrt(grid.horizon());
  d.provenance.mix = config;
  d.provenance.signal = signal;
  d.provenance.true_propagator = g_star.entries();
  return d;
}

Dataset generate_noisy_dataset(double mean, double stddev, std::size_t episodes, const TimeGrid& grid,
                               std::uint64_t seed, const Propagator<double>& g_star, double sigma_price,
                               double initial_price, int jobs) {
  require(stddev >= 0.0, "generate_noisy_dataset: stddev must be nonnegative");
  require(sigma_price >= 0.0, "generate_noisy_dataset: price noise must be nonnegative");
  require(g_star.size() == static_cast<Eigen::Index>(grid.size()), "generate_noisy_dataset: propagator size mismatch");
  const auto m = static_cast<Eigen::Index>(grid.size());
  Dataset d;
  d.grid = grid;
  d.episodes.resize(episodes);
  parallel_for(episodes, jobs, [&](std::size_t n) {
    const std::uint64_t s = episode_seed(seed, n);
    Rng rng(derive_seed(s, 2));
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXd u(m);
    for (Eigen::Index i = 0; i < m; ++i) u(i) = mean + stddev * normal(rng);
    d.episodes[n] = make_episode(g_star.entries(), u, VectorXd::Zero(m), sigma_price, initial_price, grid,
                                 derive_seed(s, 1));
  });
  d.provenance.generator = "noisy";
  d.provenance.seed = seed;
  d.provenance.noise_scale = sigma_price * std::sqrt(grid.horizon());
  d.provenance.mix.sigma_price = sigma_price;
  d.provenance.mix.initial_price = initial_price;
  d.provenance.speed_mean = mean;
  d.provenance.speed_stddev = stddev;
  d.provenance.signal = OUParams{0.0, 0.0, 0.0};
  d.provenance.true_propagator = g_star.entries();
  return d;
}

Dataset generate_custom_dataset(const std::function<VectorXd(std::size_t, const TimeGrid&)>& speeds,
                                std::size_t episodes, const TimeGrid& grid, std::uint64_t seed,
                                const Propagator<double>& g_star, double sigma_price, double initial_price) {
  const auto m = static_cast<Eigen::Index>(grid.size());
  Dataset d;
  d.grid = grid;
  for (std::size_t n = 0; n < episodes; ++n) {
    const VectorXd u = speeds(n, grid);
    require(u.size() == m, "generate_custom_dataset: strategy length does not match the grid");
    d.episodes.push_back(make_episode(g_star.entries(), u, VectorXd::Zero(m), sigma_price, initial_price, grid,
                                      derive_seed(episode_seed(seed, n), 1)));
  }
  d.provenance.generator = "custom";
  d.provenance.seed = seed;
  d.provenance.noise_scale = sigma_price * std::sqrt(grid.horizon());
  d.provenance.mix.sigma_price = sigma_price;
  d.provenance.mix.initial_price = initial_price;
  d.provenance.signal = OUParams{0.0, 0.0, 0.0};
  d.provenance.true_propagator = g_star.entries();
  return d;
}

VectorXd price_noise(const Episode& e, const MatrixXd& g_star) {
  return e.y - g_star.triangularView<Eigen::Lower>() * e.u;
}

}  // namespace proplab
