#pragma once

#include <utility>
#include <vector>

namespace sbwc::lab {

/// Least-squares line through (log x, log y).
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
};

/// Needs at least 4 points with x > 0 and y > 0 (DomainError otherwise).
/// r2 is 1 when the log-y values are all equal.
RateFit fit_rate(const std::vector<std::pair<double, double>>& series);

}  // namespace sbwc::lab
