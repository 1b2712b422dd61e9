#pragma once

#include "proplab/types.hpp"

#include <cstddef>

namespace proplab {

/// Equidistant trading grid 0 = t_1 < ... < t_M = T.
class TimeGrid {
 public:
  TimeGrid(std::size_t steps, double horizon) : steps_(steps), horizon_(horizon) {
    require(steps >= 1, "TimeGrid: at least one trading period is required");
    require(horizon > 0.0 || steps == 1, "TimeGrid: horizon must be positive");
    require(horizon >= 0.0, "TimeGrid: horizon must be nonnegative");
  }

  std::size_t size() const { return steps_; }
  double horizon() const { return horizon_; }

  // For a single-period grid the spacing is reported as the horizon itself.
  double spacing() const {
    return steps_ >= 2 ? horizon_ / static_cast<double>(steps_ - 1) : horizon_;
  }

  double time(std::size_t i) const {
    if (i + 1 == steps_ && steps_ >= 2) return horizon_;
    return static_cast<double>(i) * spacing();
  }

  // Time lag j * spacing between grid points i and i - j.
  double lag(std::size_t j) const { return static_cast<double>(j) * spacing(); }

  VectorXd times() const {
    VectorXd t(static_cast<Eigen::Index>(steps_));
    for (std::size_t i = 0; i < steps_; ++i) t(static_cast<Eigen::Index>(i)) = time(i);
    return t;
  }

  bool operator==(const TimeGrid& other) const {
    return steps_ == other.steps_ && horizon_ == other.horizon_;
  }

 private:
  std::size_t steps_;
  double horizon_;
};

}  // namespace proplab
