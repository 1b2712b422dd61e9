#pragma once

#include "proplab/time_grid.hpp"
#include "proplab/types.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace proplab {

/// Smallest eigenvalue of the symmetrized matrix G + G^T.
template <typename Derived>
typename Derived::Scalar min_symmetric_eigenvalue(const Eigen::MatrixBase<Derived>& g) {
  using Scalar = typename Derived::Scalar;
  require(g.rows() == g.cols(), "min_symmetric_eigenvalue: matrix must be square");
  if (g.size() == 0) return Scalar(0);
  const Matrix<Scalar> sym = g + g.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

template <typename Scalar>
struct AdmissibilityReport {
  bool admissible = true;
  std::vector<std::string> violations;
  Scalar min_eigenvalue = Scalar(0);
};

/// Checks membership of G in the admissible set: zero upper triangle,
/// nonnegative entries, and x^T (G + G^T) x >= kappa |x|^2.
template <typename Derived>
AdmissibilityReport<typename Derived::Scalar> validate_admissible(const Eigen::MatrixBase<Derived>& g,
                                                                  typename Derived::Scalar kappa) {
  using Scalar = typename Derived::Scalar;
  require(g.rows() == g.cols(), "validate_admissible: matrix must be square");
  AdmissibilityReport<Scalar> report;
  const Eigen::Index m = g.rows();
  bool upper_ok = true;
  bool sign_ok = true;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j > i && g(i, j) != Scalar(0)) upper_ok = false;
      if (g(i, j) < Scalar(0)) sign_ok = false;
    }
  }
  if (!upper_ok) report.violations.emplace_back("upper triangle must be zero");
  if (!sign_ok) report.violations.emplace_back("nonnegativity");

  report.min_eigenvalue = min_symmetric_eigenvalue(g);
  const Matrix<Scalar> sym = g + g.transpose();
  const Scalar scale = std::max<Scalar>(std::abs(kappa), sym.cwiseAbs().rowwise().sum().maxCoeff());
  if (report.min_eigenvalue < kappa - Scalar(1e-10) * scale) {
    report.violations.emplace_back("coercivity");
  }
  report.admissible = report.violations.empty();
  return report;
}

/// Lower-triangular nonnegative impact matrix with a coercivity bound kappa.
template <typename Scalar>
class Propagator {
 public:
  /// Validates G against kappa and throws ValidationError on failure.
  Propagator(Matrix<Scalar> entries, Scalar kappa) : entries_(std::move(entries)), kappa_(kappa) {
    require(kappa > Scalar(0), "Propagator: kappa must be positive");
    const auto report = validate_admissible(entries_, kappa_);
    if (!report.admissible) {
      std::string msg = "Propagator: matrix is not admissible:";
      for (const auto& v : report.violations) msg += " " + v + ";";
      throw ValidationError(msg);
    }
  }

  const Matrix<Scalar>& entries() const { return entries_; }
  Scalar kappa() const { return kappa_; }
  Eigen::Index size() const { return entries_.rows(); }

  /// Half of the smallest eigenvalue of G + G^T, recomputed on every call.
  Scalar eta() const { return min_symmetric_eigenvalue(entries_) / Scalar(2); }

 private:
  Matrix<Scalar> entries_;
  Scalar kappa_;
};

/// Decay kernel K_0..K_{M-1}; nonnegative, nonincreasing and convex.
template <typename Scalar>
class ConvolutionKernel {
 public:
  explicit ConvolutionKernel(Vector<Scalar> values) : values_(std::move(values)) {
    require(values_.size() >= 1, "ConvolutionKernel: empty kernel");
    const Eigen::Index m = values_.size();
    const Scalar tol = Scalar(1e-12) * std::max<Scalar>(Scalar(1), values_.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < m; ++i) {
      require(std::isfinite(static_cast<double>(values_(i))), "ConvolutionKernel: non-finite value");
      require(values_(i) >= -tol, "ConvolutionKernel: values must be nonnegative");
      if (i + 1 < m) require(values_(i + 1) <= values_(i) + tol, "ConvolutionKernel: values must be nonincreasing");
      if (i >= 1 && i + 1 < m) {
        require(values_(i) - values_(i - 1) <= values_(i + 1) - values_(i) + tol,
                "ConvolutionKernel: values must be convex");
      }
    }
  }

  const Vector<Scalar>& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }
  Scalar operator[](Eigen::Index i) const { return values_(i); }

 private:
  Vector<Scalar> values_;
};

/// K(t) = kappa / (t + 1)^beta on the grid lags j * spacing.
template <typename Scalar = double>
ConvolutionKernel<Scalar> power_law_kernel(Scalar kappa, Scalar beta, const TimeGrid& grid) {
  require(kappa > Scalar(0), "power_law_kernel: kappa must be positive");
  require(beta >= Scalar(0) && beta < Scalar(1), "power_law_kernel: beta must lie in [0, 1)");
  Vector<Scalar> v(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t j = 0; j < grid.size(); ++j) {
    v(static_cast<Eigen::Index>(j)) = kappa / std::pow(Scalar(grid.lag(j)) + Scalar(1), beta);
  }
  return ConvolutionKernel<Scalar>(std::move(v));
}

/// K(t) = kappa * exp(-rho t) on the grid lags j * spacing.
template <typename Scalar = double>
ConvolutionKernel<Scalar> exponential_kernel(Scalar kappa, Scalar rho, const TimeGrid& grid) {
  require(kappa > Scalar(0), "exponential_kernel: kappa must be positive");
  require(rho >= Scalar(0), "exponential_kernel: rho must be nonnegative");
  Vector<Scalar> v(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t j = 0; j < grid.size(); ++j) {
    v(static_cast<Eigen::Index>(j)) = kappa * std::exp(-rho * Scalar(grid.lag(j)));
  }
  return ConvolutionKernel<Scalar>(std::move(v));
}

/// Lower-triangular Toeplitz matrix with K_{i-j} at (i, j).
template <typename Derived>
Matrix<typename Derived::Scalar> toeplitz_lower(const Eigen::MatrixBase<Derived>& k) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index m = k.size();
  Matrix<Scalar> g = Matrix<Scalar>::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) g(i, j) = k(i - j);
  return g;
}

/// Embeds a kernel as a propagator. Without a requested kappa the stored bound
/// is the smallest eigenvalue of G + G^T; with one, G is validated against it.
template <typename Scalar>
Propagator<Scalar> toeplitz_embed(const ConvolutionKernel<Scalar>& kernel,
                                  std::optional<Scalar> kappa = std::nullopt) {
  Matrix<Scalar> g = toeplitz_lower(kernel.values());
  if (kappa) return Propagator<Scalar>(std::move(g), *kappa);
  const Scalar lmin = min_symmetric_eigenvalue(g);
  require(lmin > Scalar(0), "toeplitz_embed: induced matrix is not coercive");
  return Propagator<Scalar>(std::move(g), lmin);
}

}  // namespace proplab
