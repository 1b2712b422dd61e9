#include "proplab/strategy.hpp"

#include <algorithm>
#include <cmath>

namespace proplab {

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::optimal: return "optimal";
    case StrategyKind::greedy: return "greedy";
    case StrategyKind::pessimistic: return "pessimistic";
    case StrategyKind::reference: return "reference";
  }
  return "reference";
}

StrategyKind strategy_kind_from_string(const std::string& name) {
  if (name == "optimal") return StrategyKind::optimal;
  if (name == "greedy") return StrategyKind::greedy;
  if (name == "pessimistic") return StrategyKind::pessimistic;
  if (name == "reference") return StrategyKind::reference;
  throw ValidationError("unknown strategy kind: " + name);
}

void check_fuel(const Strategy& s) {
  if (!s.fuel_constrained) return;
  const double gap = std::abs(s.u.sum() - s.x0);
  require(gap <= 1e-8 * std::max(1.0, std::abs(s.x0)), "strategy violates the fuel constraint");
}

}  // namespace proplab
