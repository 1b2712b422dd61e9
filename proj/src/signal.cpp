#include "proplab/signal.hpp"

#include "proplab/rng.hpp"

#include <cmath>

namespace proplab {

namespace {

// (1 - exp(-mu * tau)) / mu with the small-mu limit tau.
double decay_integral(double mu, double tau) {
  if (mu * tau < 1e-10) return tau * (1.0 - 0.5 * mu * tau);
  return -std::expm1(-mu * tau) / mu;
}

}  // namespace

SignalPath simulate_ou(const OUParams& params, const TimeGrid& grid, std::uint64_t seed) {
  require(params.mu >= 0.0, "simulate_ou: mu must be nonnegative");
  require(params.sigma >= 0.0, "simulate_ou: sigma must be nonnegative");
  const auto m = static_cast<Eigen::Index>(grid.size());
  const double dt = grid.spacing();
  const double decay = std::exp(-params.mu * dt);
  double step_sd;
  if (params.mu * dt < 1e-10) {
    step_sd = params.sigma * std::sqrt(dt);
  } else {
    step_sd = params.sigma * std::sqrt(-std::expm1(-2.0 * params.mu * dt) / (2.0 * params.mu));
  }

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SignalPath path{VectorXd(m), VectorXd(m), grid};
  path.I(0) = params.i0;
  path.A(0) = 0.0;
  for (Eigen::Index k = 0; k + 1 < m; ++k) {
    const double xi = normal(rng);
    path.I(k + 1) = path.I(k) * decay + step_sd * xi;
    path.A(k + 1) = path.A(k) + path.I(k) * dt;
  }
  return path;
}

SignalModel SignalModel::zero() { return SignalModel(Kind::zero, OUParams{0.0, 0.0, 0.0}, std::nullopt); }

SignalModel SignalModel::deterministic(SignalPath path) {
  require(path.A.size() == static_cast<Eigen::Index>(path.grid.size()),
          "SignalModel::deterministic: path length does not match its grid");
  return SignalModel(Kind::deterministic, OUParams{0.0, 0.0, 0.0}, std::move(path));
}

SignalModel SignalModel::ou(const OUParams& params) {
  require(params.mu >= 0.0 && params.sigma >= 0.0, "SignalModel::ou: mu and sigma must be nonnegative");
  return SignalModel(Kind::ou, params, std::nullopt);
}

double SignalModel::predict_A(const SignalState& state, double target) const {
  const double scale = std::max(1.0, std::abs(target));
  require(target >= state.t - 1e-12 * scale, "predict_A: target time precedes the conditioning time");
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::ou: {
      const double tau = std::max(0.0, target - state.t);
      if (tau == 0.0) return state.A;
      return state.A + state.I * decay_integral(params_.mu, tau);
    }
    case Kind::deterministic: {
      const TimeGrid& grid = path_->grid;
      const double dt = grid.spacing();
      double pos = dt > 0.0 ? target / dt : 0.0;
      const auto k = static_cast<std::size_t>(std::llround(pos));
      require(k < grid.size() && std::abs(grid.time(k) - target) <= 1e-9 * std::max(1.0, grid.horizon()),
              "predict_A: target time is not a grid point of the stored path");
      return path_->A(static_cast<Eigen::Index>(k));
    }
  }
  return 0.0;
}

}  // namespace proplab
