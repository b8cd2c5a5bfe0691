#include "sbwc/lab/ratefit.hpp"

#include <cmath>
#include <string>

#include "sbwc/error.hpp"

namespace sbwc::lab {

RateFit fit_rate(const std::vector<std::pair<double, double>>& series) {
  if (series.size() < 4)
    throw DomainError("rate fit needs at least 4 points, got " + std::to_string(series.size()));
  const double k = static_cast<double>(series.size());
  double sx = 0, sy = 0;
  for (const auto& [x, y] : series) {
    if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(x) || !std::isfinite(y))
      throw DomainError("rate fit needs positive finite values");
    sx += std::log(x);
    sy += std::log(y);
  }
  const double mx = sx / k, my = sy / k;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : series) {
    const double dx = std::log(x) - mx, dy = std::log(y) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw DomainError("rate fit needs at least two distinct x values");
  RateFit fit;
  fit.points = static_cast<int>(series.size());
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double ss_res = syy - fit.slope * sxy;
  fit.r2 = syy == 0.0 ? 1.0 : 1.0 - std::max(ss_res, 0.0) / syy;
  return fit;
}

}  // namespace sbwc::lab
