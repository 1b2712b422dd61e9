#pragma once

#include "proplab/types.hpp"

namespace proplab {

struct NonnegativeSolve {
  VectorXd x;
  int iterations = 0;
  bool converged = true;
};

/// min 0.5 x^T Q x - c^T x subject to x >= 0, for symmetric positive definite Q.
/// Active-set method; `warm` (if nonempty) seeds the initial free set.
NonnegativeSolve nonnegative_qp(const MatrixXd& q, const VectorXd& c, const VectorXd& warm = VectorXd(),
                                int max_iterations = 0);

/// min |A x - b| subject to x >= 0 (Lawson-Hanson with QR solves).
NonnegativeSolve nonnegative_least_squares(const MatrixXd& a, const VectorXd& b, int max_iterations = 0);

}  // namespace proplab
