#include "oracles.hpp"
#include "proplab/evaluation.hpp"
#include "proplab/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace proplab;

TEST_CASE("execution cost") {
  const MatrixXd g = 0.01 * MatrixXd::Identity(2, 2);
  const auto twap = twap_strategy(2.0, 2);
  CHECK(execution_cost(twap.u, g, VectorXd::Zero(2)).impact_cost == doctest::Approx(0.02));

  Rng rng(9);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    MatrixXd r(5, 5);
    VectorXd u(5), a(5);
    for (Eigen::Index i = 0; i < 25; ++i) r.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < 5; ++i) {
      u(i) = normal(rng);
      a(i) = normal(rng);
    }
    const MatrixXd low = r.triangularView<Eigen::Lower>();
    const auto c = execution_cost(u, low, a, 0.5, "true");
    CHECK(std::abs(c.total - 0.5 - oracle::naive_cost(u, low, a)) <= 1e-12 * std::max(1.0, std::abs(c.total)));
    CHECK(c.context == "true");
    CHECK(execution_cost(u, low, VectorXd::Zero(5)).impact_cost ==
          doctest::Approx(0.5 * u.dot((low + low.transpose()) * u)).epsilon(1e-12));
  }
}

TEST_CASE("suboptimality decomposition") {
  const TimeGrid grid(6, 1.0);
  const MatrixXd g = toeplitz_lower(power_law_kernel(0.01, 0.4, grid).values());
  const VectorXd u = ow_closed_form(g, 100.0).u;
  const auto same = suboptimality_decomposition(u, u, g, g, VectorXd::Zero(6), PenaltyFn{});
  CHECK(same.suboptimality == 0.0);
  CHECK(same.spurious_correlation == 0.0);
  CHECK(same.intrinsic_uncertainty == 0.0);
  CHECK(same.optimization_error == 0.0);

  // A greedy strategy for the estimated cost has nonpositive optimization error.
  MatrixXd g_est = g;
  g_est(3, 1) += 0.002;
  const VectorXd greedy = ow_closed_form(g_est, 100.0).u;
  const auto r = suboptimality_decomposition(greedy, u, g, g_est, VectorXd::Zero(6), PenaltyFn{});
  CHECK(r.optimization_error <= 1e-6);
  CHECK(std::abs(r.spurious_correlation + r.intrinsic_uncertainty + r.optimization_error - r.suboptimality) < 1e-10);
}

TEST_CASE("regret bound and relative errors") {
  const GramInfo eye = factor_gram(MatrixXd::Identity(1, 1), 1.0);
  const PenaltyFn l1 = [&](const VectorXd& x) { return penalty_l1(x, eye, 1.0, 1.0); };
  CHECK(regret_bound(twap_strategy(1.0, 1).u, l1) == doctest::Approx(2.0));
  CHECK(regret_bound(twap_strategy(1.0, 1).u, [](const VectorXd&) { return 0.0; }) == 0.0);

  VectorXd k(2), kh(2);
  k << 1.0, 1.0;
  kh << 1.01, 0.98;
  const auto e = relative_errors(k, kh, k);
  CHECK(e.err == doctest::Approx(0.02));
  CHECK(e.err_proj == 0.0);
}

TEST_CASE("coverage in a nearly noiseless market") {
  SmallScenario sc;
  sc.noise_scale = 0.0;
  sc.assumed_noise_scale = 1e-9;
  for (auto mode : {EstimationMode::volterra, EstimationMode::convolution}) {
    const auto r = coverage_experiment(sc, mode, 10, 0.1);
    CHECK(r.violations == 0);
  }
}

TEST_CASE("coverage frequency in the small scenario") {
  const SmallScenario sc;
  for (auto mode : {EstimationMode::volterra, EstimationMode::convolution}) {
    const auto r = coverage_experiment(sc, mode, 200, 0.1, 2);
    CHECK(r.trials == 200);
    CHECK(r.frequency >= 0.85);
    CHECK(r.tail_violations <= 30);
  }
}

TEST_CASE("smaller delta never shrinks the confidence constant") {
  const SmallScenario sc;
  const Dataset d = small_scenario_dataset(sc, 0);
  const GramInfo v = gram_volterra(d, sc.lambda);
  CHECK(confidence_constant_volterra(v, sc.noise_scale, 0.05, 1.0) >=
        confidence_constant_volterra(v, sc.noise_scale, 0.1, 1.0));
}

TEST_CASE("regret experiment") {
  const SmallScenario sc;
  const auto r = regret_experiment(sc, 50, 0.1, 2);
  CHECK(r.trials == 50);
  CHECK(r.spurious_violations == 0);
  CHECK(r.quantifier_violations == 0);
  CHECK(static_cast<double>(r.bound_held) >= 0.85 * 50.0);
  for (const auto& rep : r.reports)
    CHECK(std::abs(rep.spurious_correlation + rep.intrinsic_uncertainty + rep.optimization_error -
                   rep.suboptimality) <= 1e-8 * std::max(1.0, std::abs(rep.suboptimality)));
}

TEST_CASE("rate experiment produces positive bounds") {
  MarketScenario sc;
  sc.steps = 12;
  const auto r = rate_experiment(sc, {40, 80, 160}, 0.1, {1, 2}, 2);
  REQUIRE(r.median_bounds.size() == 3);
  for (double b : r.median_bounds) CHECK(b > 0.0);
  for (double b : r.median_closed_form) CHECK(b > 0.0);
  CHECK(std::isfinite(r.median_slope));
  CHECK(r.closed_form_slope < 0.0);
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}
