#pragma once

#include "proplab/types.hpp"

#include <string>
#include <vector>

namespace proplab {

enum class StrategyKind { optimal, greedy, pessimistic, reference };

std::string to_string(StrategyKind kind);
StrategyKind strategy_kind_from_string(const std::string& name);

/// Diagnostics filled in by iterative solvers; defaults describe a direct solve.
struct SolverDiagnostics {
  int iterations = 0;
  bool converged = true;
  bool ball_active = false;
  double objective = 0.0;
  double penalty = 0.0;
  std::vector<double> objective_history;  // accepted iterates of the final solve
};

/// Trading speeds u_1..u_M together with the inventory target they liquidate.
struct Strategy {
  VectorXd u;
  double x0 = 0.0;
  StrategyKind kind = StrategyKind::reference;
  bool fuel_constrained = true;
  SolverDiagnostics diagnostics;

  Eigen::Index size() const { return u.size(); }
};

/// Throws ValidationError when a fuel-constrained strategy misses its target
/// by more than 1e-8 * max(1, |x0|).
void check_fuel(const Strategy& s);

}  // namespace proplab
