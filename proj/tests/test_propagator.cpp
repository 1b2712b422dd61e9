#include "proplab/propagator.hpp"

#include <doctest.h>

#include <cmath>

using namespace proplab;

TEST_CASE("power-law kernel values on the grid") {
  const TimeGrid grid(78, 77.0);  // unit spacing, so lag j is j time units
  const auto k = power_law_kernel(0.01, 0.4, grid);
  CHECK(k[0] == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(k[1] == doctest::Approx(0.01 * std::pow(2.0, -0.4)).epsilon(1e-14));
  const auto flat = power_law_kernel(0.01, 0.0, grid);
  for (Eigen::Index j = 0; j < flat.size(); ++j) CHECK(flat[j] == 0.01);
  CHECK_THROWS_AS(power_law_kernel(0.01, 1.0, grid), ValidationError);
  CHECK_THROWS_AS(power_law_kernel(-0.01, 0.4, grid), ValidationError);
}

TEST_CASE("exponential kernel values on the grid") {
  const TimeGrid grid(10, 9.0);
  const auto k = exponential_kernel(0.01, 0.04, grid);
  CHECK(k[0] == 0.01);
  CHECK(k[1] == doctest::Approx(0.01 * std::exp(-0.04)).epsilon(1e-14));
  const auto flat = exponential_kernel(0.01, 0.0, grid);
  CHECK(flat.values().isConstant(0.01));
}

TEST_CASE("time grid spacing and lags") {
  const TimeGrid grid(78, 1.0);
  CHECK(grid.spacing() == doctest::Approx(1.0 / 77.0));
  CHECK(grid.time(0) == 0.0);
  CHECK(grid.time(77) == doctest::Approx(1.0));
  CHECK(grid.lag(3) == doctest::Approx(3.0 / 77.0));
  CHECK_THROWS_AS(TimeGrid(0, 1.0), ValidationError);
  CHECK_THROWS_AS(TimeGrid(5, -1.0), ValidationError);
}

TEST_CASE("toeplitz embedding") {
  VectorXd spike = VectorXd::Zero(4);
  spike(0) = 0.01;
  const auto g = toeplitz_embed(ConvolutionKernel<double>(spike));
  CHECK(g.entries().isApprox(0.01 * MatrixXd::Identity(4, 4)));

  const TimeGrid grid(2, 1.0);
  const auto e = toeplitz_embed(exponential_kernel(0.01, 0.04, grid));
  CHECK(e.entries()(0, 0) == 0.01);
  CHECK(e.entries()(1, 1) == 0.01);
  CHECK(e.entries()(0, 1) == 0.0);
  CHECK(e.entries()(1, 0) == doctest::Approx(0.01 * std::exp(-0.04 * grid.spacing())).epsilon(1e-14));
}

TEST_CASE("admissibility validation") {
  const MatrixXd g = 0.01 * MatrixXd::Identity(3, 3);
  const auto ok = validate_admissible(g, 0.01);
  CHECK(ok.admissible);
  CHECK(ok.min_eigenvalue == doctest::Approx(0.02));

  MatrixXd bad = g;
  bad(1, 0) = -0.001;
  const auto r = validate_admissible(bad, 0.01);
  CHECK_FALSE(r.admissible);
  REQUIRE(r.violations.size() >= 1);
  CHECK(r.violations.front() == "nonnegativity");

  MatrixXd upper = g;
  upper(0, 2) = 0.001;
  CHECK_FALSE(validate_admissible(upper, 0.01).admissible);

  const TimeGrid grid(78, 1.0);
  const MatrixXd pl = toeplitz_lower(power_law_kernel(0.01, 0.4, grid).values());
  const auto report = validate_admissible(pl, 0.01);
  // Independent eigenvalue computation of the symmetrized matrix.
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(pl + pl.transpose());
  CHECK(eig.eigenvalues()(0) >= 0.01);
  CHECK(report.admissible);
  CHECK(report.min_eigenvalue == doctest::Approx(eig.eigenvalues()(0)).epsilon(1e-10));
  CHECK_THROWS_AS(Propagator<double>(bad, 0.01), ValidationError);
  CHECK_THROWS_AS(Propagator<double>(g, 0.0), ValidationError);
}

TEST_CASE("convolution kernel shape validation") {
  VectorXd increasing(3);
  increasing << 1.0, 2.0, 0.5;
  CHECK_THROWS_AS(ConvolutionKernel<double>{increasing}, ValidationError);
  VectorXd concave(3);
  concave << 1.0, 0.9, 0.1;
  CHECK_THROWS_AS(ConvolutionKernel<double>{concave}, ValidationError);
  VectorXd negative(2);
  negative << 1.0, -0.1;
  CHECK_THROWS_AS(ConvolutionKernel<double>{negative}, ValidationError);
}

TEST_CASE("eta is half the smallest symmetric eigenvalue") {
  const Propagator<double> g(0.02 * MatrixXd::Identity(3, 3), 0.01);
  CHECK(g.eta() == doctest::Approx(0.02));
}

TEST_CASE("templated on the scalar type") {
  const TimeGrid grid(5, 1.0);
  const auto k = power_law_kernel<long double>(0.01L, 0.4L, grid);
  const auto g = toeplitz_embed(k);
  CHECK(static_cast<double>(g.entries()(4, 0)) == doctest::Approx(0.01 / std::pow(2.0, 0.4)).epsilon(1e-14));
}
