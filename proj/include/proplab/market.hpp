#pragma once

#include "proplab/propagator.hpp"
#include "proplab/signal.hpp"
#include "proplab/strategy.hpp"
#include "proplab/time_grid.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace proplab {

/// One trading day: prices S_1..S_{M+1}, speeds u, signal A and regression
/// target y_i = S_{i+1} - S_1 - A_i.
struct Episode {
  VectorXd S;
  VectorXd u;
  VectorXd A;
  VectorXd y;
};

struct UniformRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Three reference trader types: TWAP, jittered exponential-kernel optimal
/// execution, and a trend follower on the expected-return signal.
struct TraderMixConfig {
  UniformRange inventory{500.0, 2000.0};
  // Jitter ranges are multiplicative factors applied to the base parameters.
  UniformRange rho_jitter{0.5, 1.5};
  UniformRange kappa_jitter{0.5, 1.5};
  UniformRange mu_jitter{0.5, 1.5};
  double base_kappa = 0.01;
  double base_rho = 0.04;
  double base_mu = 0.1;
  double weight_twap = 1.0;
  double weight_ow = 1.0;
  double weight_trend = 1.0;
  double sigma_price = 0.0088;
  double initial_price = 100.0;

  void validate() const;
};

/// How a dataset was produced; enough to regenerate it bit-exactly.
struct Provenance {
  std::string generator;  // "trader_mix", "noisy" or "custom"
  std::uint64_t seed = 0;
  double noise_scale = 0.0;  // sub-Gaussian constant R
  TraderMixConfig mix;
  OUParams signal;
  double speed_mean = 0.0;
  double speed_stddev = 0.0;
  MatrixXd true_propagator;
};

struct Dataset {
  std::vector<Episode> episodes;
  TimeGrid grid{1, 1.0};
  Provenance provenance;

  std::size_t size() const { return episodes.size(); }
};

/// Per-episode trader components, reproducible from the episode seed.
struct TraderComponents {
  VectorXd twap;
  VectorXd ow;
  VectorXd trend;
  SignalPath signal;
};

Strategy twap_strategy(double x0, std::size_t steps);
Strategy ow_strategy(const Propagator<double>& g, double x0);
Strategy trend_follower_strategy(const VectorXd& expected_return, double kappa_hat, double mu_hat,
                                 const TimeGrid& grid);

std::uint64_t episode_seed(std::uint64_t master, std::size_t episode);

TraderComponents trader_components(const TraderMixConfig& config, const OUParams& signal, const TimeGrid& grid,
                                   std::uint64_t episode_seed);

/// Builds an episode from given speeds and signal, adding sigma_price * W noise
/// drawn from `noise_seed`.
Episode make_episode(const MatrixXd& g_star, const VectorXd& u, const VectorXd& signal_a, double sigma_price,
                     double initial_price, const TimeGrid& grid, std::uint64_t noise_seed);

Dataset generate_dataset(const TraderMixConfig& config, const Propagator<double>& g_star, const OUParams& signal,
                         std::size_t episodes, const TimeGrid& grid, std::uint64_t seed, int jobs = 1);

Dataset generate_noisy_dataset(double mean, double stddev, std::size_t episodes, const TimeGrid& grid,
                               std::uint64_t seed, const Propagator<double>& g_star, double sigma_price = 0.0088,
                               double initial_price = 100.0, int jobs = 1);

/// Hook for user-supplied strategy generators: speeds(n, grid) gives episode n's
/// speeds; the signal is zero.
Dataset generate_custom_dataset(const std::function<VectorXd(std::size_t, const TimeGrid&)>& speeds,
                                std::size_t episodes, const TimeGrid& grid, std::uint64_t seed,
                                const Propagator<double>& g_star, double sigma_price, double initial_price = 100.0);

/// Noise vector y - G* u of an episode.
VectorXd price_noise(const Episode& e, const MatrixXd& g_star);

}  // namespace proplab
