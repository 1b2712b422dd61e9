#include "proplab/estimation.hpp"

#include "proplab/nnls.hpp"
#include "proplab/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace proplab {

namespace {

std::vector<VectorXd> speeds_of(const Dataset& data) {
  std::vector<VectorXd> out;
  out.reserve(data.size());
  for (const auto& e : data.episodes) out.push_back(e.u);
  return out;
}

std::vector<VectorXd> targets_of(const Dataset& data) {
  std::vector<VectorXd> out;
  out.reserve(data.size());
  for (const auto& e : data.episodes) out.push_back(e.y);
  return out;
}

void check_lambda(double lambda) { require(lambda > 0.0, "regularization weight lambda must be positive"); }

// Frobenius projection onto {Z : Z + Z^T >= kappa I}: clip the symmetric part
// at kappa / 2, keep the skew part.
MatrixXd project_coercive(const MatrixXd& y, double kappa) {
  const MatrixXd sym = 0.5 * (y + y.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym);
  const VectorXd clipped = eig.eigenvalues().cwiseMax(0.5 * kappa);
  const MatrixXd sym_proj = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  return sym_proj + 0.5 * (y - y.transpose());
}

// Row solver for min 0.5 x^T Q x - c^T x, x >= 0 with Q = V_11 + rho I.
// The free set and its factorization from the previous call are tried first.
struct RowSolver {
  std::vector<Eigen::Index> free;
  Eigen::LLT<MatrixXd> factor;
  double rho = -1.0;
  VectorXd x;

  VectorXd solve(const MatrixXd& v, const VectorXd& c, double rho_now) {
    const Eigen::Index n = c.size();
    if (x.size() != n) x = VectorXd::Zero(n);
    if (rho_now == rho && !free.empty()) {
      const auto k = static_cast<Eigen::Index>(free.size());
      VectorXd cs(k);
      for (Eigen::Index a = 0; a < k; ++a) cs(a) = c(free[a]);
      const VectorXd zs = factor.solve(cs);
      if (zs.minCoeff() > 0.0) {
        VectorXd z = VectorXd::Zero(n);
        for (Eigen::Index a = 0; a < k; ++a) z(free[a]) = zs(a);
        const VectorXd w = c - v.topLeftCorner(n, n) * z - rho_now * z;
        const double tol = 1e-13 * (c.cwiseAbs().maxCoeff() + w.cwiseAbs().maxCoeff());
        bool optimal = true;
        for (Eigen::Index j = 0; j < n && optimal; ++j) {
          if (z(j) == 0.0 && w(j) > tol) optimal = false;
        }
        if (optimal) {
          x = z;
          return x;
        }
      }
    }
    MatrixXd q = v.topLeftCorner(n, n);
    q.diagonal().array() += rho_now;
    x = nonnegative_qp(q, c, x).x;
    free.clear();
    for (Eigen::Index j = 0; j < n; ++j)
      if (x(j) > 0.0) free.push_back(j);
    const auto k = static_cast<Eigen::Index>(free.size());
    MatrixXd qs(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b) qs(a, b) = q(free[a], free[b]);
    factor.compute(qs);
    rho = rho_now;
    return x;
  }
};

// Smallest diagonal shift s >= 0 with lambda_min(G + G^T + 2 s I) >= kappa.
double coercivity_shift(const MatrixXd& g, double kappa) {
  const double lmin = min_symmetric_eigenvalue(g);
  return std::max(0.0, 0.5 * (kappa - lmin));
}

}  // namespace

GramInfo make_gram(const MatrixXd& outer_sum, double lambda) {
  check_lambda(lambda);
  require(outer_sum.rows() == outer_sum.cols(), "make_gram: matrix must be square");
  MatrixXd regularized = outer_sum;
  regularized.diagonal().array() += lambda;
  return factor_gram(regularized, lambda);
}

GramInfo factor_gram(const MatrixXd& regularized, double lambda) {
  check_lambda(lambda);
  require(regularized.rows() == regularized.cols(), "factor_gram: matrix must be square");
  GramInfo g;
  g.lambda = lambda;
  g.matrix = 0.5 * (regularized + regularized.transpose());
  const Eigen::Index m = g.matrix.rows();
  if (m == 0) return g;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(g.matrix);
  // Rounding can push tiny eigenvalues of the PSD part below zero; lambda bounds them.
  const VectorXd ev = eig.eigenvalues().cwiseMax(lambda * (1.0 - 1e-12));
  g.sqrt_factor = eig.eigenvectors() * ev.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
  g.inv_sqrt_factor =
      eig.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  Eigen::LLT<MatrixXd> llt(g.matrix);
  if (llt.info() == Eigen::Success) {
    g.log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  } else {
    g.log_det = ev.array().log().sum();
  }
  return g;
}

MatrixXd toeplitz_of_strategy(const VectorXd& u) { return toeplitz_lower(u); }

GramInfo gram_volterra(const std::vector<VectorXd>& speeds, Eigen::Index m, double lambda) {
  MatrixXd sum = MatrixXd::Zero(m, m);
  for (const auto& u : speeds) {
    require(u.size() == m, "gram_volterra: strategy length mismatch");
    sum.selfadjointView<Eigen::Lower>().rankUpdate(u);
  }
  sum.triangularView<Eigen::StrictlyUpper>() = sum.transpose();
  return make_gram(sum, lambda);
}

GramInfo gram_convolution(const std::vector<VectorXd>& speeds, Eigen::Index m, double lambda) {
  MatrixXd sum = MatrixXd::Zero(m, m);
  for (const auto& u : speeds) {
    require(u.size() == m, "gram_convolution: strategy length mismatch");
    const MatrixXd U = toeplitz_of_strategy(u);
    sum.noalias() += U.transpose() * U;
  }
  return make_gram(sum, lambda);
}

GramInfo gram_volterra(const Dataset& data, double lambda) {
  return gram_volterra(speeds_of(data), static_cast<Eigen::Index>(data.grid.size()), lambda);
}

GramInfo gram_convolution(const Dataset& data, double lambda) {
  return gram_convolution(speeds_of(data), static_cast<Eigen::Index>(data.grid.size()), lambda);
}

MatrixXd ridge_ls_volterra(const std::vector<VectorXd>& speeds, const std::vector<VectorXd>& targets,
                           double lambda) {
  check_lambda(lambda);
  require(speeds.size() == targets.size() && !speeds.empty(), "ridge_ls_volterra: need matching nonempty data");
  const Eigen::Index m = speeds.front().size();
  const GramInfo gram = gram_volterra(speeds, m, lambda);
  MatrixXd uy = MatrixXd::Zero(m, m);
  for (std::size_t n = 0; n < speeds.size(); ++n) {
    require(targets[n].size() == m, "ridge_ls_volterra: target length mismatch");
    uy.noalias() += speeds[n] * targets[n].transpose();
  }
  // G V = sum y u^T  <=>  V G^T = sum u y^T.
  return gram.matrix.llt().solve(uy).transpose();
}

MatrixXd ridge_ls_volterra(const Dataset& data, double lambda) {
  return ridge_ls_volterra(speeds_of(data), targets_of(data), lambda);
}

VectorXd ridge_ls_convolution(const std::vector<VectorXd>& speeds, const std::vector<VectorXd>& targets,
                              double lambda) {
  check_lambda(lambda);
  require(speeds.size() == targets.size() && !speeds.empty(), "ridge_ls_convolution: need matching nonempty data");
  const Eigen::Index m = speeds.front().size();
  const GramInfo gram = gram_convolution(speeds, m, lambda);
  VectorXd uy = VectorXd::Zero(m);
  for (std::size_t n = 0; n < speeds.size(); ++n) {
    require(targets[n].size() == m, "ridge_ls_convolution: target length mismatch");
    uy.noalias() += toeplitz_of_strategy(speeds[n]).transpose() * targets[n];
  }
  return gram.matrix.llt().solve(uy);
}

VectorXd ridge_ls_convolution(const Dataset& data, double lambda) {
  return ridge_ls_convolution(speeds_of(data), targets_of(data), lambda);
}

double weighted_distance_volterra(const MatrixXd& a, const MatrixXd& b, const GramInfo& gram) {
  const MatrixXd d = a - b;
  return std::sqrt(std::max(0.0, (d * gram.matrix * d.transpose()).trace()));
}

double weighted_distance_convolution(const VectorXd& a, const VectorXd& b, const GramInfo& gram) {
  const VectorXd d = a - b;
  return std::sqrt(std::max(0.0, d.dot(gram.matrix * d)));
}

VolterraProjection project_volterra(const MatrixXd& g_tilde, const GramInfo& gram, double kappa,
                                    const ProjectionOptions& options) {
  const Eigen::Index m = g_tilde.rows();
  require(g_tilde.cols() == m && gram.size() == m, "project_volterra: dimension mismatch");
  require(kappa >= 0.0, "project_volterra: kappa must be nonnegative");
  const MatrixXd& v = gram.matrix;
  const MatrixXd b = g_tilde * v;  // row i holds (V g_i)^T

  // ADMM on G = Z with G in {lower triangular, nonnegative} and Z coercive.
  // The G-step is an exact row-wise nonnegative QP in the V metric.
  Eigen::SelfAdjointEigenSolver<MatrixXd> veig(v, Eigen::EigenvaluesOnly);
  double rho = std::sqrt(std::max(veig.eigenvalues().minCoeff(), 1e-300) * veig.eigenvalues().maxCoeff());
  MatrixXd g = g_tilde.triangularView<Eigen::Lower>();
  g = g.cwiseMax(0.0);
  MatrixXd z = project_coercive(g, kappa);
  MatrixXd w = MatrixXd::Zero(m, m);
  std::vector<RowSolver> rows(static_cast<std::size_t>(m));

  VolterraProjection out;
  out.converged = false;
  const double scale = std::max({g_tilde.norm(), std::sqrt(static_cast<double>(m)) * kappa, 1e-300});
  for (out.iterations = 1; out.iterations <= options.max_iterations; ++out.iterations) {
    const MatrixXd target = z - w;
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index n = i + 1;
      const VectorXd c = b.row(i).head(n).transpose() + rho * target.row(i).head(n).transpose();
      g.row(i).head(n) = rows[static_cast<std::size_t>(i)].solve(v, c, rho).transpose();
    }
    const MatrixXd z_prev = z;
    z = project_coercive(g + w, kappa);
    w += g - z;

    const double primal = (g - z).norm();
    const double dual = rho * (z - z_prev).norm();
    const double eps_primal = options.tolerance * std::max({g.norm(), z.norm(), scale});
    const double eps_dual = options.tolerance * rho * std::max(w.norm(), scale);
    if (primal <= eps_primal && dual <= eps_dual) {
      out.converged = true;
      break;
    }
    if (out.iterations % 10 == 0) {
      // Residual balancing; the scaled dual variable moves with rho.
      const double rp = primal / eps_primal;
      const double rd = dual / eps_dual;
      if (rp > 10.0 * rd) {
        rho *= 2.0;
        w /= 2.0;
      } else if (rd > 10.0 * rp) {
        rho /= 2.0;
        w *= 2.0;
      }
    }
  }
  if (out.iterations > options.max_iterations) out.iterations = options.max_iterations;

  out.lift = coercivity_shift(g, kappa);
  if (out.lift > 0.0) g.diagonal().array() += out.lift;
  out.entries = g;
  out.weighted_distance = weighted_distance_volterra(out.entries, g_tilde, gram);
  return out;
}

ConvolutionProjection project_convolution(const VectorXd& k_tilde, const GramInfo& gram, double kappa,
                                          const ProjectionOptions& options) {
  const Eigen::Index m = k_tilde.size();
  require(gram.size() == m && m >= 1, "project_convolution: dimension mismatch");
  require(kappa >= 0.0, "project_convolution: kappa must be nonnegative");
  // Nonnegative, nonincreasing, convex sequences are exactly the nonnegative
  // combinations of the constant 1 and the hinges max(k - j, 0), k = 1..M-1.
  MatrixXd basis = MatrixXd::Zero(m, m);
  basis.col(0).setOnes();
  for (Eigen::Index k = 1; k < m; ++k)
    for (Eigen::Index j = 0; j < k; ++j) basis(j, k) = static_cast<double>(k - j);

  const MatrixXd a = gram.sqrt_factor * basis;
  const VectorXd rhs = gram.sqrt_factor * k_tilde;
  const NonnegativeSolve sol = nonnegative_least_squares(a, rhs, options.max_iterations);

  ConvolutionProjection out;
  out.values = basis * sol.x;
  out.iterations = sol.iterations;
  out.converged = sol.converged;
  out.lift = coercivity_shift(toeplitz_lower(out.values), kappa);
  out.values(0) += out.lift;
  out.weighted_distance = weighted_distance_convolution(out.values, k_tilde, gram);
  return out;
}

double confidence_constant_volterra(const GramInfo& gram, double noise_scale, double delta, double kernel_bound) {
  require(delta > 0.0 && delta < 1.0, "confidence_constant_volterra: delta must lie in (0, 1)");
  require(noise_scale >= 0.0 && kernel_bound >= 0.0, "confidence_constant_volterra: bounds must be nonnegative");
  const double m = static_cast<double>(gram.size());
  const double info = m * gram.log_det - m * m * std::log(gram.lambda);
  const double radicand = std::max(0.0, info) + 2.0 * std::log(1.0 / delta);
  return noise_scale * std::sqrt(radicand) + gram.lambda * kernel_bound * gram.inv_sqrt_factor.norm();
}

double confidence_constant_convolution(const GramInfo& gram, double noise_scale, double delta,
                                       double kernel_bound) {
  require(delta > 0.0 && delta < 1.0, "confidence_constant_convolution: delta must lie in (0, 1)");
  require(noise_scale >= 0.0 && kernel_bound >= 0.0, "confidence_constant_convolution: bounds must be nonnegative");
  const double m = static_cast<double>(gram.size());
  const double info = gram.log_det - m * std::log(gram.lambda);
  const double radicand = std::max(0.0, info) + 2.0 * std::log(1.0 / delta);
  return noise_scale * std::sqrt(radicand) + gram.lambda * kernel_bound * gram.inv_sqrt_factor.norm();
}

std::string to_string(EstimationMode mode) { return mode == EstimationMode::volterra ? "volterra" : "convolution"; }

EstimationMode estimation_mode_from_string(const std::string& name) {
  if (name == "volterra") return EstimationMode::volterra;
  if (name == "convolution") return EstimationMode::convolution;
  throw ValidationError("unknown estimation mode: " + name);
}

MatrixXd EstimationResult::propagator_matrix() const {
  if (mode == EstimationMode::volterra) return projected;
  return toeplitz_lower(VectorXd(projected.col(0)));
}

EstimationResult estimate(const Dataset& data, const EstimationConfig& config) {
  require(data.size() >= 1, "estimate: dataset is empty");
  EstimationResult r;
  r.mode = config.mode;
  r.delta = config.delta;
  r.kappa = config.kappa;
  r.noise_scale = config.noise_scale >= 0.0 ? config.noise_scale : data.provenance.noise_scale;
  if (config.mode == EstimationMode::volterra) {
    r.gram = gram_volterra(data, config.lambda);
    r.unconstrained = ridge_ls_volterra(data, config.lambda);
    const VolterraProjection p = project_volterra(r.unconstrained, r.gram, config.kappa, config.projection);
    r.projected = p.entries;
    r.iterations = p.iterations;
    r.converged = p.converged;
    r.lift = p.lift;
    r.kernel_bound = config.kernel_bound >= 0.0 ? config.kernel_bound : 2.0 * r.projected.norm();
    r.confidence = confidence_constant_volterra(r.gram, r.noise_scale, r.delta, r.kernel_bound);
  } else {
    r.gram = gram_convolution(data, config.lambda);
    r.unconstrained = ridge_ls_convolution(data, config.lambda);
    const ConvolutionProjection p =
        project_convolution(VectorXd(r.unconstrained.col(0)), r.gram, config.kappa, config.projection);
    r.projected = p.values;
    r.iterations = p.iterations;
    r.converged = p.converged;
    r.lift = p.lift;
    r.kernel_bound = config.kernel_bound >= 0.0 ? config.kernel_bound : 2.0 * r.projected.norm();
    r.confidence = confidence_constant_convolution(r.gram, r.noise_scale, r.delta, r.kernel_bound);
  }
  return r;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "log_log_slope: need at least two points");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, "log_log_slope: values must be positive");
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  require(sxx > 0.0, "log_log_slope: x values must not all coincide");
  return sxy / sxx;
}

ConcentrationReport concentration_check(const std::vector<VectorXd>& speeds, ConcentrationMode mode,
                                        double delta) {
  require(speeds.size() >= 2, "concentration_check: need at least two episodes");
  require(delta > 0.0 && delta < 1.0, "concentration_check: delta must lie in (0, 1)");
  const Eigen::Index m = speeds.front().size();
  const std::size_t total = speeds.size();
  std::vector<MatrixXd> samples;
  samples.reserve(total);
  for (const auto& u : speeds) {
    require(u.size() == m, "concentration_check: strategy length mismatch");
    if (mode == ConcentrationMode::volterra) {
      samples.emplace_back(u * u.transpose());
    } else {
      const MatrixXd U = toeplitz_of_strategy(u);
      samples.emplace_back(U.transpose() * U);
    }
  }
  ConcentrationReport r;
  r.sigma_hat = MatrixXd::Zero(m, m);
  for (const auto& s : samples) r.sigma_hat += s;
  r.sigma_hat /= static_cast<double>(total);

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(r.sigma_hat, Eigen::EigenvaluesOnly);
  r.min_eigenvalue = eig.eigenvalues().minCoeff();
  r.max_eigenvalue = eig.eigenvalues().maxCoeff();
  const double cutoff = 1e-10 * std::max(r.max_eigenvalue, 1e-300);
  r.rank = (eig.eigenvalues().array() > cutoff).count();
  r.rank_deficient = r.rank < m;

  // Disjoint blocks of size n; the deviation from the full mean is rescaled by
  // 1 / sqrt(1 - n / N) because the full mean contains the block itself.
  std::vector<double> scaled_all;
  for (std::size_t n = total / 2; n >= 1; n /= 2) {
    const std::size_t blocks = total / n;
    double mean_dev = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
      MatrixXd mean = MatrixXd::Zero(m, m);
      for (std::size_t k = b * n; k < (b + 1) * n; ++k) mean += samples[k];
      mean /= static_cast<double>(n);
      Eigen::SelfAdjointEigenSolver<MatrixXd> dev(mean - r.sigma_hat, Eigen::EigenvaluesOnly);
      const double spectral = dev.eigenvalues().cwiseAbs().maxCoeff() /
                              std::sqrt(1.0 - static_cast<double>(n) / static_cast<double>(total));
      mean_dev += spectral / static_cast<double>(blocks);
      scaled_all.push_back(std::sqrt(static_cast<double>(n)) * spectral);
    }
    r.block_sizes.push_back(n);
    r.deviations.push_back(mean_dev);
    r.scaled_deviations.push_back(std::sqrt(static_cast<double>(n)) * mean_dev);
    if (n == 1) break;
  }
  std::sort(scaled_all.begin(), scaled_all.end());
  const auto q = static_cast<std::size_t>(std::ceil((1.0 - delta) * static_cast<double>(scaled_all.size())));
  r.fitted_constant = scaled_all[std::min(scaled_all.size() - 1, q == 0 ? 0 : q - 1)];

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < r.block_sizes.size(); ++i) {
    if (r.deviations[i] > 0.0) {
      xs.push_back(static_cast<double>(r.block_sizes[i]));
      ys.push_back(r.deviations[i]);
    }
  }
  r.slope = xs.size() >= 2 ? log_log_slope(xs, ys) : 0.0;
  return r;
}

ConcentrationReport concentration_check(const Dataset& data, ConcentrationMode mode, double delta) {
  std::vector<VectorXd> speeds;
  for (const auto& e : data.episodes) speeds.push_back(e.u);
  return concentration_check(speeds, mode, delta);
}

}  // namespace proplab
