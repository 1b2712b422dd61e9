#pragma once

#include "proplab/time_grid.hpp"
#include "proplab/types.hpp"

#include <cstdint>
#include <optional>

namespace proplab {

struct OUParams {
  double mu = 0.1;
  double sigma = 0.06;
  double i0 = 0.0;
};

/// Expected-return samples I and the integrated signal A on a grid.
/// A uses the left-Riemann rule A_{k+1} = A_k + I_k * spacing, A_0 = 0.
struct SignalPath {
  VectorXd I;
  VectorXd A;
  TimeGrid grid{1, 1.0};
};

SignalPath simulate_ou(const OUParams& params, const TimeGrid& grid, std::uint64_t seed);

/// Information available at a decision time: t, I_t and A_t.
struct SignalState {
  double t = 0.0;
  double I = 0.0;
  double A = 0.0;
};

/// Conditional-expectation predictor for the trading signal.
class SignalModel {
 public:
  enum class Kind { zero, deterministic, ou };

  static SignalModel zero();
  static SignalModel deterministic(SignalPath path);
  static SignalModel ou(const OUParams& params);

  Kind kind() const { return kind_; }

  /// E[A_{target} | state]. Throws ValidationError if target < state.t.
  double predict_A(const SignalState& state, double target) const;

  const OUParams& ou_params() const { return params_; }
  const std::optional<SignalPath>& path() const { return path_; }

 private:
  SignalModel(Kind kind, OUParams params, std::optional<SignalPath> path)
      : kind_(kind), params_(params), path_(std::move(path)) {}

  Kind kind_;
  OUParams params_;
  std::optional<SignalPath> path_;
};

/// State at grid index i of a realized path.
inline SignalState state_at(const SignalPath& path, std::size_t i) {
  const auto k = static_cast<Eigen::Index>(i);
  return SignalState{path.grid.time(i), path.I(k), path.A(k)};
}

}  // namespace proplab
