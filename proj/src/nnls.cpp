#include "proplab/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace proplab {

namespace {

// Shared Lawson-Hanson loop. `solve_free(free)` returns the unconstrained
// minimizer restricted to the free indices; `neg_gradient(x)` returns -grad.
template <typename SolveFree, typename NegGradient>
NonnegativeSolve active_set(Eigen::Index n, VectorXd x, SolveFree&& solve_free, NegGradient&& neg_gradient,
                            double tol_scale, int max_iterations) {
  NonnegativeSolve out;
  if (max_iterations <= 0) max_iterations = static_cast<int>(10 * n + 50);
  std::vector<bool> free(static_cast<std::size_t>(n), false);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (x(j) > 0.0) free[static_cast<std::size_t>(j)] = true;
    else x(j) = 0.0;
  }

  // Moves x toward the free-set minimizer until it is strictly feasible there.
  // Returns false if the newly added index was dropped on the first pass.
  auto settle = [&](Eigen::Index added) {
    bool first = true;
    for (int inner = 0; inner < 4 * n + 10; ++inner) {
      VectorXd z = solve_free(free);
      double alpha = 1.0;
      bool interior = true;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!free[static_cast<std::size_t>(j)] || z(j) > 0.0) continue;
        interior = false;
        if (first && j == added) {
          free[static_cast<std::size_t>(j)] = false;
          return false;
        }
        const double denom = x(j) - z(j);
        if (denom > 0.0) alpha = std::min(alpha, x(j) / denom);
      }
      first = false;
      if (interior) {
        x = z;
        return true;
      }
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (free[static_cast<std::size_t>(j)] && x(j) <= 1e-300) {
          free[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
      }
    }
    return true;
  };

  if (std::any_of(free.begin(), free.end(), [](bool b) { return b; })) settle(-1);

  std::vector<bool> skipped(static_cast<std::size_t>(n), false);
  for (out.iterations = 0; out.iterations < max_iterations; ++out.iterations) {
    const VectorXd w = neg_gradient(x);
    const double tol = 1e-13 * (tol_scale + w.cwiseAbs().maxCoeff());
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      if (free[sj] || skipped[sj]) continue;
      if (w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    }
    if (best < 0) {
      out.x = x;
      return out;
    }
    free[static_cast<std::size_t>(best)] = true;
    if (!settle(best)) {
      skipped[static_cast<std::size_t>(best)] = true;
    } else {
      std::fill(skipped.begin(), skipped.end(), false);
    }
  }
  out.x = x;
  out.converged = false;
  return out;
}

std::vector<Eigen::Index> indices_of(const std::vector<bool>& free) {
  std::vector<Eigen::Index> idx;
  for (std::size_t j = 0; j < free.size(); ++j)
    if (free[j]) idx.push_back(static_cast<Eigen::Index>(j));
  return idx;
}

}  // namespace

NonnegativeSolve nonnegative_qp(const MatrixXd& q, const VectorXd& c, const VectorXd& warm, int max_iterations) {
  const Eigen::Index n = c.size();
  require(q.rows() == n && q.cols() == n, "nonnegative_qp: dimension mismatch");
  VectorXd x = warm.size() == n ? warm : VectorXd::Zero(n);
  auto solve_free = [&](const std::vector<bool>& free) {
    const auto idx = indices_of(free);
    VectorXd z = VectorXd::Zero(n);
    if (idx.empty()) return z;
    const auto k = static_cast<Eigen::Index>(idx.size());
    MatrixXd qs(k, k);
    VectorXd cs(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      cs(a) = c(idx[a]);
      for (Eigen::Index b = 0; b < k; ++b) qs(a, b) = q(idx[a], idx[b]);
    }
    Eigen::LLT<MatrixXd> llt(qs);
    VectorXd zs = llt.info() == Eigen::Success ? VectorXd(llt.solve(cs)) : VectorXd(qs.ldlt().solve(cs));
    for (Eigen::Index a = 0; a < k; ++a) z(idx[a]) = zs(a);
    return z;
  };
  auto neg_gradient = [&](const VectorXd& xv) { return VectorXd(c - q * xv); };
  return active_set(n, x, solve_free, neg_gradient, c.cwiseAbs().maxCoeff(), max_iterations);
}

NonnegativeSolve nonnegative_least_squares(const MatrixXd& a, const VectorXd& b, int max_iterations) {
  const Eigen::Index n = a.cols();
  require(a.rows() == b.size(), "nonnegative_least_squares: dimension mismatch");
  auto solve_free = [&](const std::vector<bool>& free) {
    const auto idx = indices_of(free);
    VectorXd z = VectorXd::Zero(n);
    if (idx.empty()) return z;
    MatrixXd as(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) as.col(static_cast<Eigen::Index>(k)) = a.col(idx[k]);
    const VectorXd zs = as.colPivHouseholderQr().solve(b);
    for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zs(static_cast<Eigen::Index>(k));
    return z;
  };
  auto neg_gradient = [&](const VectorXd& xv) { return VectorXd(a.transpose() * (b - a * xv)); };
  const double scale = (a.transpose() * b).cwiseAbs().maxCoeff();
  return active_set(n, VectorXd::Zero(n), solve_free, neg_gradient, scale, max_iterations);
}

}  // namespace proplab
