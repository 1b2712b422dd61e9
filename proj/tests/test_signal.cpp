#include "proplab/rng.hpp"
#include "proplab/signal.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace proplab;

TEST_CASE("zero-volatility paths are deterministic") {
  const TimeGrid grid(78, 1.0);
  const auto flat = simulate_ou({0.1, 0.0, 0.0}, grid, 11);
  CHECK(flat.I.isZero(0.0));
  CHECK(flat.A.isZero(0.0));

  const auto decay = simulate_ou({0.1, 0.0, 1.0}, grid, 11);
  double worst = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k)
    worst = std::max(worst, std::abs(decay.I(static_cast<Eigen::Index>(k)) - std::exp(-0.1 * grid.time(k))));
  CHECK(worst < 1e-12);
  // Left-Riemann integral of the decaying path.
  double a = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) a += decay.I(static_cast<Eigen::Index>(k)) * grid.spacing();
  CHECK(decay.A(77) == doctest::Approx(a).epsilon(1e-14));
}

TEST_CASE("terminal variance matches the OU formula") {
  const TimeGrid grid(78, 1.0);
  const OUParams p{0.1, 0.06, 0.0};
  const int paths = 100000;
  double s = 0.0, s2 = 0.0;
  for (int n = 0; n < paths; ++n) {
    const double x = simulate_ou(p, grid, derive_seed(2024, static_cast<std::uint64_t>(n))).I(77);
    s += x;
    s2 += x * x;
  }
  const double mean = s / paths;
  const double var = s2 / paths - mean * mean;
  const double expected = p.sigma * p.sigma * (1.0 - std::exp(-2.0 * p.mu)) / (2.0 * p.mu);
  CHECK(std::abs(var / expected - 1.0) < 0.02);
}

TEST_CASE("same seed gives bit-identical paths") {
  const TimeGrid grid(78, 1.0);
  const auto a = simulate_ou({}, grid, 99);
  const auto b = simulate_ou({}, grid, 99);
  const auto c = simulate_ou({}, grid, 100);
  CHECK(a.I == b.I);
  CHECK(a.A == b.A);
  CHECK(a.I != c.I);
}

TEST_CASE("OU prediction of the integrated signal") {
  const auto model = SignalModel::ou({0.1, 0.06, 0.0});
  const SignalState s{0.0, 1.0, 0.0};
  CHECK(model.predict_A(s, 1.0) == doctest::Approx((1.0 - std::exp(-0.1)) / 0.1).epsilon(1e-14));
  CHECK(model.predict_A(SignalState{0.3, 0.7, 0.25}, 0.3) == 0.25);
  CHECK_THROWS_AS(model.predict_A(SignalState{0.5, 1.0, 0.0}, 0.2), ValidationError);

  // Near-zero mean reversion approaches the linear drift I * (t_k - t_j).
  const auto slow = SignalModel::ou({1e-12, 0.06, 0.0});
  const double lin = 0.8 * 0.6;
  CHECK(std::abs(slow.predict_A(SignalState{0.2, 0.8, 0.0}, 0.8) - lin) <= 1e-6 * lin);

  CHECK(SignalModel::zero().predict_A(SignalState{0.1, 5.0, 3.0}, 0.9) == 0.0);
}

TEST_CASE("OU prediction agrees with a fine-grid Monte Carlo mean") {
  // Independent simulation: Euler steps on a fine grid, trapezoidal integral.
  const double mu = 0.1, sigma = 0.06, horizon = 1.0;
  const int steps = 400, paths = 200000;
  const double dt = horizon / steps;
  Rng rng(77);
  std::normal_distribution<double> normal(0.0, 1.0);
  double s = 0.0, s2 = 0.0;
  const double decay = std::exp(-mu * dt);
  const double sd = sigma * std::sqrt((1.0 - std::exp(-2.0 * mu * dt)) / (2.0 * mu));
  for (int n = 0; n < paths; ++n) {
    double i = 1.0, a = 0.0;
    for (int k = 0; k < steps; ++k) {
      const double next = i * decay + sd * normal(rng);
      a += 0.5 * (i + next) * dt;
      i = next;
    }
    s += a;
    s2 += a * a;
  }
  const double mean = s / paths;
  const double se = std::sqrt((s2 / paths - mean * mean) / paths);
  const double predicted = SignalModel::ou({mu, sigma, 0.0}).predict_A(SignalState{0.0, 1.0, 0.0}, horizon);
  CHECK(std::abs(mean - predicted) <= 3.0 * se);
}

TEST_CASE("deterministic model returns the stored path") {
  const TimeGrid grid(5, 1.0);
  SignalPath p{VectorXd::Zero(5), 0.3 * grid.times(), grid};
  const auto model = SignalModel::deterministic(p);
  CHECK(model.predict_A(state_at(p, 1), grid.time(3)) == doctest::Approx(0.3 * grid.time(3)));
  CHECK_THROWS_AS(model.predict_A(state_at(p, 0), 0.1), ValidationError);
}

TEST_CASE("seed derivation separates streams") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(5, 3) == derive_seed(5, 3));
}
