#include "oracles.hpp"
#include "proplab/estimation.hpp"
#include "proplab/market.hpp"

#include <doctest.h>

#include <cmath>

using namespace proplab;

TEST_CASE("TWAP strategies") {
  const auto a = twap_strategy(780.0, 78);
  CHECK(a.u.isConstant(10.0));
  const auto b = twap_strategy(1.0, 3);
  CHECK(b.u.sum() == 1.0);
  const auto c = twap_strategy(1000.0, 78);
  CHECK(c.u(0) == doctest::Approx(1000.0 / 78.0));
  CHECK(std::abs(c.u.sum() - 1000.0) <= 1e-12);
}

TEST_CASE("Obizhaeva-Wang strategies") {
  const auto flat = ow_strategy(Propagator<double>(0.01 * MatrixXd::Identity(6, 6), 0.01), 600.0);
  CHECK((flat.u - VectorXd::Constant(6, 100.0)).cwiseAbs().maxCoeff() < 1e-10);

  const auto two = ow_strategy(toeplitz_embed(exponential_kernel(0.01, 0.04, TimeGrid(2, 1.0))), 1000.0);
  CHECK(two.u(0) == doctest::Approx(500.0));
  CHECK(two.u(1) == doctest::Approx(500.0));

  const auto g3 = toeplitz_embed(exponential_kernel(0.01, 0.04, TimeGrid(3, 1.0)));
  const auto three = ow_strategy(g3, 1000.0);
  const VectorXd direct = oracle::kkt_solve(g3.entries(), VectorXd::Zero(3), 1000.0);
  CHECK((three.u - direct).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(three.u(0) == doctest::Approx(three.u(2)).epsilon(1e-12));
  CHECK(three.u(0) > three.u(1));

  // Grid search over the fuel simplex with u_1 = u_3 (by symmetry).
  double best = 0.0, best_cost = 1e300;
  for (int k = 0; k <= 200000; ++k) {
    const double u1 = 300.0 + 100.0 * k / 200000.0;
    VectorXd u(3);
    u << u1, 1000.0 - 2.0 * u1, u1;
    const double c = oracle::naive_cost(u, g3.entries(), VectorXd::Zero(3));
    if (c < best_cost) {
      best_cost = c;
      best = u1;
    }
  }
  CHECK(std::abs(best - three.u(0)) < 1e-3);
}

TEST_CASE("trend follower") {
  const TimeGrid grid(78, 1.0);
  const auto zero = trend_follower_strategy(VectorXd::Zero(78), 0.01, 0.1, grid);
  CHECK(zero.u.isZero(0.0));
  const auto one = trend_follower_strategy(VectorXd::Ones(78), 0.01, 0.1, grid);
  CHECK(one.u(0) == doctest::Approx((1.0 - std::exp(-0.1)) / 0.002).epsilon(1e-13));
  CHECK(one.u(77) == 0.0);
  CHECK_FALSE(one.fuel_constrained);
}

TEST_CASE("noiseless TWAP-only market reveals the temporary impact") {
  const TimeGrid grid(10, 1.0);
  TraderMixConfig mix;
  mix.sigma_price = 0.0;
  mix.weight_ow = 0.0;
  mix.weight_trend = 0.0;
  const Propagator<double> g(0.01 * MatrixXd::Identity(10, 10), 0.01);
  const Dataset d = generate_dataset(mix, g, OUParams{0.1, 0.0, 0.0}, 5, grid, 3);
  for (const auto& e : d.episodes) {
    CHECK((e.y - 0.01 * e.u).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(e.S(0) == 100.0);
  }
}

TEST_CASE("trader-mix datasets are reproducible from per-episode seeds") {
  const TimeGrid grid(78, 1.0);
  const TraderMixConfig mix;
  const OUParams signal;
  const auto g = toeplitz_embed(power_law_kernel(0.01, 0.4, grid));
  const Dataset a = generate_dataset(mix, g, signal, 252, grid, 42);
  const Dataset b = generate_dataset(mix, g, signal, 252, grid, 42, 3);
  REQUIRE(a.size() == 252);
  for (std::size_t n = 0; n < a.size(); ++n) {
    CHECK(a.episodes[n].u == b.episodes[n].u);
    CHECK(a.episodes[n].S == b.episodes[n].S);
  }
  const std::size_t n = 17;
  const auto c = trader_components(mix, signal, grid, episode_seed(42, n));
  CHECK((a.episodes[n].u - (c.twap + c.ow + c.trend)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.episodes[n].A == c.signal.A);
  // Noise is exactly sigma_P times a Brownian path started at zero.
  const VectorXd noise = price_noise(a.episodes[n], g.entries());
  CHECK(std::abs(noise(0)) < 1e-12);
}

TEST_CASE("single-episode dataset has a rank-one Gram part") {
  const TimeGrid grid(6, 1.0);
  const auto g = toeplitz_embed(power_law_kernel(0.01, 0.4, grid));
  const Dataset d = generate_dataset(TraderMixConfig{}, g, OUParams{}, 1, grid, 5);
  REQUIRE(d.size() == 1);
  const GramInfo v = gram_volterra(d, 1e-3);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(v.matrix - 1e-3 * MatrixXd::Identity(6, 6));
  int rank = 0;
  for (Eigen::Index i = 0; i < 6; ++i) rank += eig.eigenvalues()(i) > 1e-9 * eig.eigenvalues().maxCoeff();
  CHECK(rank <= 1);
}

TEST_CASE("noisy i.i.d. datasets") {
  const TimeGrid grid(78, 1.0);
  const auto g = toeplitz_embed(power_law_kernel(0.01, 0.4, grid));
  const Dataset flat = generate_noisy_dataset(50.0, 0.0, 4, grid, 1, g);
  for (const auto& e : flat.episodes) CHECK(e.u.isConstant(50.0));

  const Dataset d = generate_noisy_dataset(50.0, 9.0, 252, grid, 8, g);
  double s = 0.0;
  for (const auto& e : d.episodes) s += e.u.sum();
  const double count = 252.0 * 78.0;
  const double mean = s / count;
  CHECK(std::abs(mean - 50.0) <= 3.0 * 9.0 / std::sqrt(count));

  const Dataset again = generate_noisy_dataset(50.0, 9.0, 252, grid, 8, g);
  for (std::size_t n = 0; n < d.size(); ++n) CHECK(d.episodes[n].y == again.episodes[n].y);
}

TEST_CASE("invalid market configurations are rejected") {
  TraderMixConfig mix;
  mix.inventory = {10.0, 5.0};
  CHECK_THROWS_AS(mix.validate(), ValidationError);
  mix = TraderMixConfig{};
  mix.sigma_price = -1.0;
  CHECK_THROWS_AS(mix.validate(), ValidationError);
}
