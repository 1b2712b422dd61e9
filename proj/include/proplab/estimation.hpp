#pragma once

#include "proplab/market.hpp"
#include "proplab/types.hpp"

#include <string>
#include <vector>

namespace proplab {

/// Regularized Gram matrix with its symmetric square root, inverse root and
/// log-determinant.
struct GramInfo {
  MatrixXd matrix;
  double lambda = 0.0;
  MatrixXd sqrt_factor;
  MatrixXd inv_sqrt_factor;
  double log_det = 0.0;

  Eigen::Index size() const { return matrix.rows(); }
};

/// Adds lambda * I to a positive semidefinite sum and factors the result.
GramInfo make_gram(const MatrixXd& outer_sum, double lambda);

/// Factors an already regularized Gram matrix.
GramInfo factor_gram(const MatrixXd& regularized, double lambda);

/// Lower-triangular Toeplitz matrix U with U(i, j) = u(i - j).
MatrixXd toeplitz_of_strategy(const VectorXd& u);

GramInfo gram_volterra(const std::vector<VectorXd>& speeds, Eigen::Index m, double lambda);
GramInfo gram_convolution(const std::vector<VectorXd>& speeds, Eigen::Index m, double lambda);
GramInfo gram_volterra(const Dataset& data, double lambda);
GramInfo gram_convolution(const Dataset& data, double lambda);

/// (sum_n y u^T) V^{-1}.
MatrixXd ridge_ls_volterra(const std::vector<VectorXd>& speeds, const std::vector<VectorXd>& targets, double lambda);
MatrixXd ridge_ls_volterra(const Dataset& data, double lambda);

/// W^{-1} sum_n U_n^T y_n.
VectorXd ridge_ls_convolution(const std::vector<VectorXd>& speeds, const std::vector<VectorXd>& targets,
                              double lambda);
VectorXd ridge_ls_convolution(const Dataset& data, double lambda);

struct ProjectionOptions {
  double tolerance = 1e-9;
  int max_iterations = 10000;
};

struct VolterraProjection {
  MatrixXd entries;
  int iterations = 0;
  bool converged = true;
  double lift = 0.0;              // diagonal shift added to reach exact coercivity
  double weighted_distance = 0.0; // |(G - G_tilde) V^{1/2}|_F
};

/// Minimizes |(G - G_tilde) V^{1/2}|_F over lower-triangular nonnegative G with
/// G + G^T >= kappa I.
VolterraProjection project_volterra(const MatrixXd& g_tilde, const GramInfo& gram, double kappa,
                                    const ProjectionOptions& options = {});

struct ConvolutionProjection {
  VectorXd values;
  int iterations = 0;
  bool converged = true;
  double lift = 0.0;
  double weighted_distance = 0.0; // |W^{1/2}(K - K_tilde)|
};

/// Minimizes |W^{1/2}(K - K_tilde)| over nonnegative, nonincreasing, convex K,
/// then raises K_0 if the induced propagator misses the coercivity bound.
ConvolutionProjection project_convolution(const VectorXd& k_tilde, const GramInfo& gram, double kappa,
                                          const ProjectionOptions& options = {});

double weighted_distance_volterra(const MatrixXd& a, const MatrixXd& b, const GramInfo& gram);
double weighted_distance_convolution(const VectorXd& a, const VectorXd& b, const GramInfo& gram);

/// Radius of the confidence ellipsoid for the Volterra estimator:
/// R sqrt(M log det V - M^2 log lambda + 2 log(1/delta)) + lambda L_G |V^{-1/2}|_F.
double confidence_constant_volterra(const GramInfo& gram, double noise_scale, double delta, double kernel_bound);

/// Same for the convolution estimator with exponent M instead of M^2.
double confidence_constant_convolution(const GramInfo& gram, double noise_scale, double delta, double kernel_bound);

enum class EstimationMode { volterra, convolution };
std::string to_string(EstimationMode mode);
EstimationMode estimation_mode_from_string(const std::string& name);

struct EstimationConfig {
  EstimationMode mode = EstimationMode::convolution;
  double lambda = 1e-3;
  double kappa = 0.01;
  double delta = 0.1;
  double noise_scale = -1.0;   // negative: take R from dataset provenance
  double kernel_bound = -1.0;  // negative: 2 |estimate|_F
  ProjectionOptions projection;
};

struct EstimationResult {
  EstimationMode mode = EstimationMode::convolution;
  // Volterra: M x M matrices. Convolution: M x 1 kernels.
  MatrixXd unconstrained;
  MatrixXd projected;
  GramInfo gram;
  double noise_scale = 0.0;
  double delta = 0.1;
  double kernel_bound = 0.0;
  double kappa = 0.0;
  double confidence = 0.0;
  int iterations = 0;
  bool converged = true;
  double lift = 0.0;

  /// Projected estimate as an M x M propagator matrix.
  MatrixXd propagator_matrix() const;
};

EstimationResult estimate(const Dataset& data, const EstimationConfig& config);

enum class ConcentrationMode { volterra, toeplitz };

struct ConcentrationReport {
  MatrixXd sigma_hat;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  Eigen::Index rank = 0;
  bool rank_deficient = false;
  std::vector<std::size_t> block_sizes;
  std::vector<double> deviations;         // block-averaged |block mean - sigma_hat|_2
  std::vector<double> scaled_deviations;  // sqrt(n) * deviation
  double fitted_constant = 0.0;           // (1 - delta)-quantile of block-level scaled deviations
  double slope = 0.0;                     // log-log slope of deviations vs n
};

/// Estimates the second-moment matrix of u (or U^T U) and how fast block means
/// of size n approach it. Needs at least two episodes.
ConcentrationReport concentration_check(const std::vector<VectorXd>& speeds, ConcentrationMode mode,
                                        double delta = 0.1);
ConcentrationReport concentration_check(const Dataset& data, ConcentrationMode mode, double delta = 0.1);

/// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace proplab
