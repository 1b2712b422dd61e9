#pragma once

#include "proplab/config.hpp"
#include "proplab/evaluation.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace proplab {

/// One (kernel, N, seed) cell of the convolution accuracy table.
struct AccuracyCell {
  std::string kernel;
  std::size_t episodes = 0;
  std::uint64_t seed = 0;
  double err = 0.0;
  double err_proj = 0.0;
  bool converged = true;
};

/// Convolution estimators on the trader-mix market for a power-law kernel with
/// beta = 0.1 and an exponential kernel with rho = 0.1; datasets of size N are
/// prefixes of one dataset per seed.
std::vector<AccuracyCell> accuracy_experiment(const ExperimentConfig& base, const std::vector<std::size_t>& sizes,
                                              const std::vector<std::uint64_t>& seeds, int jobs = 1);

/// Optimal (true kernel), greedy and pessimistic (Volterra estimate) strategies
/// with zero signal, priced under the true propagator.
struct CostComparison {
  double optimal = 0.0;
  double greedy = 0.0;
  double pessimistic = 0.0;
  Strategy optimal_strategy;
  Strategy greedy_strategy;
  Strategy pessimistic_strategy;
  EstimationResult estimation;

  double gap_ratio() const { return (pessimistic - optimal) / (greedy - optimal); }
};

CostComparison cost_comparison(const ExperimentConfig& config, std::uint64_t seed);

/// Runs a named reproduction target and writes its CSV bundle to `out_dir`.
/// Targets: table-accuracy, table-costs, figure-kernels, figure-strategies, appendix-noisy.
std::vector<std::string> reproduce(const std::string& target, const ExperimentConfig& config,
                                   const std::string& out_dir, int jobs = 1);

const std::vector<std::string>& reproduction_targets();

}  // namespace proplab
