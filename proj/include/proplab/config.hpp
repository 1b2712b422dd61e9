#pragma once

#include "proplab/estimation.hpp"
#include "proplab/execution.hpp"
#include "proplab/market.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace proplab {

struct KernelSpec {
  std::string kind = "power_law";  // power_law | exponential
  double kappa = 0.01;
  double beta = 0.4;
  double rho = 0.04;

  ConvolutionKernel<double> kernel(const TimeGrid& grid) const;
  Propagator<double> propagator(const TimeGrid& grid) const;
};

struct DatasetSpec {
  std::string generator = "trader_mix";  // trader_mix | noisy
  std::size_t episodes = 252;
  std::uint64_t seed = 1;
  TraderMixConfig mix;
  OUParams signal;
  double speed_mean = 50.0;
  double speed_stddev = 9.0;
};

struct ControlSpec {
  double x0 = 1000.0;
  std::string signal = "zero";  // zero | ou (simulated path from signal_seed)
  std::uint64_t signal_seed = 1;
  PessimisticConfig pessimism;
};

/// Full description of a pipeline run; defaults describe the synthetic
/// trader-mix market (M = 78, T = 1, N = 252, lambda = 1e-3).
struct ExperimentConfig {
  std::string scenario = "default";
  KernelSpec kernel;
  std::size_t steps = 78;
  double horizon = 1.0;
  DatasetSpec dataset;
  EstimationConfig estimation;
  ControlSpec control;
  std::string output_dir = "out";
  int jobs = 1;

  TimeGrid grid() const { return TimeGrid(steps, horizon); }
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

Dataset generate_from_config(const ExperimentConfig& config);

}  // namespace proplab
