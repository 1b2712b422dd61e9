#pragma once

#include "proplab/estimation.hpp"
#include "proplab/execution.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace proplab {

struct CostReport {
  double impact_cost = 0.0;  // sum_i sum_{j<=i} G_ij u_j u_i
  double signal_cost = 0.0;  // sum_i A_i u_i
  double penalty = 0.0;
  double total = 0.0;
  std::string context;       // which propagator priced the strategy
};

/// J(u; G) with signal A, plus an optional penalty term.
CostReport execution_cost(const VectorXd& u, const MatrixXd& g, const VectorXd& signal, double penalty = 0.0,
                          std::string context = {});

/// Total of execution_cost without the report.
double cost(const VectorXd& u, const MatrixXd& g, const VectorXd& signal);

using PenaltyFn = std::function<double(const VectorXd&)>;

struct RegretReport {
  double suboptimality = 0.0;          // J(u_hat; G*) - J(u_ref; G*)
  double spurious_correlation = 0.0;   // J(u_hat; G*) - Jhat(u_hat; G_est)
  double intrinsic_uncertainty = 0.0;  // Jhat(u_ref; G_est) - J(u_ref; G*)
  double optimization_error = 0.0;     // Jhat(u_hat; G_est) - Jhat(u_ref; G_est)
  double bound = 0.0;                  // 2 * penalty(u_ref)
  bool held = false;                   // suboptimality <= bound
};

/// Jhat(u; G_est) = J(u; G_est) + penalty(u). A null penalty counts as zero.
RegretReport suboptimality_decomposition(const VectorXd& u_hat, const VectorXd& u_ref, const MatrixXd& g_star,
                                         const MatrixXd& g_est, const VectorXd& signal, const PenaltyFn& penalty);

double regret_bound(const VectorXd& u_ref, const PenaltyFn& penalty);
/// Twice the mean penalty over sampled reference strategies.
double regret_bound(const std::vector<VectorXd>& u_refs, const PenaltyFn& penalty);

struct RelativeErrors {
  double err = 0.0;       // unconstrained estimate
  double err_proj = 0.0;  // projected estimate
};

/// max_j |K*_j - K_j| / K*_j for both estimates.
RelativeErrors relative_errors(const VectorXd& k_star, const VectorXd& k_tilde, const VectorXd& k_proj);

/// Small synthetic scenario with i.i.d. Gaussian observation noise of known scale.
struct SmallScenario {
  std::size_t steps = 5;
  double horizon = 1.0;
  std::size_t episodes = 50;
  double kappa = 0.01;
  double beta = 0.4;
  double speed_mean = 50.0;
  double speed_stddev = 9.0;
  double noise_scale = 0.5;  // standard deviation of each noise component
  double assumed_noise_scale = -1.0;  // R passed to the estimator; negative uses noise_scale
  double lambda = 1e-3;
  double x0 = 100.0;
  std::uint64_t seed = 7;
};

/// Independent dataset for trial `trial` of a small scenario.
Dataset small_scenario_dataset(const SmallScenario& scenario, std::size_t trial);

struct CoverageReport {
  EstimationMode mode = EstimationMode::volterra;
  std::size_t trials = 0;
  std::size_t violations = 0;       // estimator outside the confidence ellipsoid
  std::size_t tail_violations = 0;  // noise martingale outside its tail bound
  double frequency = 0.0;           // 1 - violations / trials
  double standard_error = 0.0;
  double target = 0.0;              // 1 - delta
  std::vector<double> ratios;       // weighted error / confidence constant per trial
};

CoverageReport coverage_experiment(const SmallScenario& scenario, EstimationMode mode, std::size_t trials,
                                   double delta, int jobs = 1);

struct RegretExperimentReport {
  std::size_t trials = 0;
  std::size_t bound_held = 0;          // regret <= 2 l_1(u*)
  std::size_t event_held = 0;          // confidence inequality held
  std::size_t spurious_violations = 0; // event held but term (i) > 1e-6
  std::size_t quantifier_violations = 0;  // event held but |J(u;G*) - J(u;G_est)| > l_1(u) for a probe
  double frequency = 0.0;
  double standard_error = 0.0;
  std::vector<RegretReport> reports;
};

/// Pessimistic Volterra strategy versus the true optimum over independent datasets.
RegretExperimentReport regret_experiment(const SmallScenario& scenario, std::size_t trials, double delta,
                                         int jobs = 1);

/// Trader-mix market scenario used for rate and cost experiments.
struct MarketScenario {
  std::size_t steps = 78;
  double horizon = 1.0;
  std::string kernel = "power_law";  // or "exponential"
  double kappa = 0.01;
  double beta = 0.4;
  double rho = 0.04;
  TraderMixConfig mix;
  OUParams signal;
  double x0 = 1000.0;
};

Propagator<double> scenario_propagator(const MarketScenario& scenario);

struct RateReport {
  std::vector<std::size_t> sizes;
  std::vector<double> median_bounds;
  std::vector<std::vector<double>> bounds;  // [seed][size]
  std::vector<double> slopes;               // per seed
  double median_slope = 0.0;
  std::vector<double> fitted_constants;     // C(delta) per seed
  // Closed-form bound (C_1(N) + C_2) / sqrt(N) from the Gram spectrum and C(delta).
  std::vector<double> median_closed_form;
  double closed_form_slope = 0.0;
};

/// Regret bound 2 l_2(W, u*) under lambda = C(delta) sqrt(N) across sample sizes.
RateReport rate_experiment(const MarketScenario& scenario, const std::vector<std::size_t>& sizes, double delta,
                           const std::vector<std::uint64_t>& seeds, int jobs = 1);

double median(std::vector<double> values);

}  // namespace proplab
