#pragma once

#include "proplab/estimation.hpp"
#include "proplab/propagator.hpp"
#include "proplab/signal.hpp"
#include "proplab/strategy.hpp"

namespace proplab {

/// Constrained minimizer of u^T G u subject to sum(u) = x0 (no signal):
/// x0 (G + G^T)^{-1} 1 / (1^T (G + G^T)^{-1} 1).
Strategy ow_closed_form(const MatrixXd& g, double x0);

/// Path-independent pieces of the explicit optimal strategy plus the
/// path-dependent vectors of the last evaluation.
struct OptimalControlWorkspace {
  double eta = 0.0;
  MatrixXd g_tilde;      // G - eta I
  MatrixXd response;     // row i: row i of G_tilde^T (D^(i))^{-1}
  MatrixXd k_matrix;     // lower triangular
  MatrixXd system;       // 2 eta I + K
  VectorXd a;
  VectorXd column_sums;  // column sums of (2 eta I + K)^{-1}
  VectorXd b;
  VectorXd h;
  // Filled per signal path.
  VectorXd g;
  VectorXd c;
  VectorXd lambda_path;  // E_{t_r}[lambda]
};

/// Builds the signal-independent part of the workspace. Throws ValidationError
/// if G is not lower triangular with G + G^T positive definite, or if some
/// D^(l) is numerically singular.
OptimalControlWorkspace build_workspace(const MatrixXd& g);

/// All-zero signal path on a grid.
SignalPath zero_path(const TimeGrid& grid);

/// Pathwise optimal strategy for propagator G against the realized signal path,
/// using `model` for conditional expectations of future signal values.
Strategy optimal_strategy(const MatrixXd& g, const SignalModel& model, const SignalPath& path, double x0,
                          OptimalControlWorkspace* workspace = nullptr);
Strategy optimal_strategy(const Propagator<double>& g, const SignalModel& model, const SignalPath& path, double x0,
                          OptimalControlWorkspace* workspace = nullptr);

/// optimal_strategy evaluated with an estimated propagator.
Strategy greedy_strategy(const MatrixXd& g_est, const SignalModel& model, const SignalPath& path, double x0);

/// E_{t_1}[A_{t_k}] for every k: the signal term used by the pessimistic problems.
VectorXd expected_signal(const SignalModel& model, const SignalPath& path);

double penalty_l1(const VectorXd& u, const GramInfo& gram_v, double confidence, double strategy_bound);
double penalty_l2(const VectorXd& u, const GramInfo& gram_w, double confidence, double strategy_bound);

/// P with u^T P u = |U W^{-1/2}|_F^2 for U the Toeplitz matrix of u:
/// P(a, b) = sum_{i >= max(a, b)} (W^{-1})(i - a, i - b).
MatrixXd convolution_penalty_matrix(const GramInfo& gram_w);

struct PessimisticConfig {
  double delta = 0.1;
  double strategy_bound = -1.0;  // L_A; negative selects 10 x0 sqrt(M)
  double kernel_bound = -1.0;    // L_G or L_K; negative selects twice the estimate's norm
  double confidence = -1.0;      // C(N); negative computes it from the Gram matrix
  double noise_scale = 0.0;      // R, used when confidence is computed
  double smoothing = 1e-10;      // epsilon = smoothing * x0
  double tolerance = 1e-10;      // relative objective change
  int max_iterations = 100000;

  void validate() const;
};

/// Resolved constants actually used by a pessimistic solve.
struct PessimisticConstants {
  double strategy_bound = 0.0;
  double kernel_bound = 0.0;
  double confidence = 0.0;
};

PessimisticConstants resolve_volterra_constants(const MatrixXd& g_est, const GramInfo& gram_v,
                                                const PessimisticConfig& config, double x0);
PessimisticConstants resolve_convolution_constants(const VectorXd& k_est, const GramInfo& gram_w,
                                                   const PessimisticConfig& config, double x0);

/// Minimizes u^T G u + A^T u + weight * sqrt(u^T P u + eps^2) over sum(u) = x0,
/// |u| <= strategy_bound, by damped Newton steps in the hyperplane.
Strategy minimize_penalized_cost(const MatrixXd& g, const VectorXd& signal, const MatrixXd& penalty_matrix,
                                 double weight, double x0, double strategy_bound, const PessimisticConfig& config);

/// Minimizes the Volterra pessimistic objective J + l_1.
Strategy pessimistic_strategy_volterra(const MatrixXd& g_est, const GramInfo& gram_v, const PessimisticConfig& config,
                                       const VectorXd& signal, double x0);

/// Minimizes the convolution pessimistic objective J + l_2.
Strategy pessimistic_strategy_convolution(const VectorXd& k_est, const GramInfo& gram_w,
                                          const PessimisticConfig& config, const VectorXd& signal, double x0);

}  // namespace proplab
