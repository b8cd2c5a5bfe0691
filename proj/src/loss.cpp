#include "sbwc/loss.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "sbwc/error.hpp"

namespace sbwc {
namespace {

LossValue polytail_eval(double beta, double u) {
  if (u >= 1.0) {
    const double f = std::pow(u, -beta);
    return {f, -beta * f / u, beta * (beta + 1.0) * f / (u * u)};
  }
  const double k = beta + 1.0;
  const double c = beta * (beta + 1.0);
  const double e = std::exp(k * (u - 1.0));
  // f'(u) = -beta - (c/k)(1 - e), integrated back from f(1) = 1.
  const double f = 1.0 + (beta + c / k) * (1.0 - u) - (c / (k * k)) * (1.0 - e);
  return {f, -beta - (c / k) * (1.0 - e), c * e};
}

// sup_u |f'(u)| / f(u) for the polytail family, by grid search plus
// golden-section polish; the ratio is maximized just left of the junction.
double polytail_self_bound(double beta) {
  auto ratio = [beta](double u) {
    const auto v = polytail_eval(beta, u);
    return -v.d1 / v.f;
  };
  double best = beta, arg = 1.0;
  for (int k = 0; k <= 200000; ++k) {
    const double u = -50.0 + 51.0 * k / 200000.0;
    const double r = ratio(u);
    if (r > best) best = r, arg = u;
  }
  double a = arg - 51.0 / 200000.0, b = std::min(1.0, arg + 51.0 / 200000.0);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 100; ++it) {
    const double c = b - g * (b - a), e = a + g * (b - a);
    if (ratio(c) > ratio(e)) b = e; else a = c;
  }
  return std::max(best, ratio(0.5 * (a + b))) * (1.0 + 1e-12);
}

}  // namespace

LossSpec LossSpec::logistic() {
  return {LossKind::logistic, 0.0, 1.0, 0.25, 1.0, true};
}

LossSpec LossSpec::exponential() {
  return {LossKind::exponential, 0.0, std::nullopt, std::nullopt, 1.0, true};
}

LossSpec LossSpec::polytail(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw DomainError("polytail exponent must be positive and finite");
  static std::mutex mu;
  static std::map<double, double> cache;
  double bf;
  {
    std::lock_guard lock(mu);
    auto it = cache.find(beta);
    if (it == cache.end()) it = cache.emplace(beta, polytail_self_bound(beta)).first;
    bf = it->second;
  }
  // Left asymptotic slope is -2 beta; curvature peaks at the junction.
  return {LossKind::polytail, beta, 2.0 * beta, beta * (beta + 1.0), bf, false};
}

LossSpec LossSpec::parse(std::string_view text) {
  if (text == "logistic") return logistic();
  if (text == "exp" || text == "exponential") return exponential();
  if (text.starts_with("poly:")) {
    const auto num = text.substr(5);
    double beta = 0.0;
    const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), beta);
    if (ec != std::errc() || ptr != num.data() + num.size())
      throw ParseError("bad polytail exponent in '" + std::string(text) + "'");
    return polytail(beta);
  }
  throw ParseError("unknown loss '" + std::string(text) +
                   "' (expected logistic, exp or poly:<beta>)");
}

std::string LossSpec::name() const {
  switch (kind) {
    case LossKind::logistic: return "logistic";
    case LossKind::exponential: return "exp";
    case LossKind::polytail: {
      char buf[64];
      const auto res = std::to_chars(buf, buf + sizeof buf, beta);
      return "poly:" + std::string(buf, res.ptr);
    }
  }
  return "?";
}

LossValue loss_eval_unchecked(const LossSpec& spec, double u) noexcept {
  switch (spec.kind) {
    case LossKind::logistic: {
      // f(u) = log(1 + e^-u), f'(u) = -1/(1+e^u), f''(u) = s(u)(1 - s(u)).
      if (u >= 0.0) {
        const double e = std::exp(-u);
        const double s = 1.0 / (1.0 + e);  // sigmoid(u)
        return {std::log1p(e), -e * s, s * e * s};
      }
      const double e = std::exp(u);
      const double sc = 1.0 / (1.0 + e);  // sigmoid(-u)
      return {-u + std::log1p(e), -sc, e * sc * sc};
    }
    case LossKind::exponential: {
      const double e = std::exp(-u);
      return {e, -e, e};
    }
    case LossKind::polytail:
      return polytail_eval(spec.beta, u);
  }
  return {0.0, 0.0, 0.0};
}

LossValue loss_eval(const LossSpec& spec, double u) {
  if (!std::isfinite(u)) throw DomainError("loss_eval: non-finite input");
  return loss_eval_unchecked(spec, u);
}

LossCertificate certify_loss(const LossSpec& spec, std::span<const double> grid) {
  constexpr double kSlack = 1e-12;
  LossCertificate c{spec.g_f.has_value(), spec.l_f.has_value(),
                    spec.beta_f.has_value(), true};
  for (double u : grid) {
    const auto v = loss_eval(spec, u);
    if (c.lipschitz && *spec.g_f - std::abs(v.d1) < -kSlack) c.lipschitz = false;
    if (c.smooth && *spec.l_f - v.d2 < -kSlack) c.smooth = false;
    if (c.self_bounded && *spec.beta_f * v.f - std::abs(v.d1) < -kSlack)
      c.self_bounded = false;
    if (c.second_order_self_bounded && v.f - v.d2 < -kSlack)
      c.second_order_self_bounded = false;
  }
  return c;
}

std::vector<double> default_certification_grid() {
  constexpr int kLinear = 100000;
  constexpr int kLog = 50000;  // per side
  std::vector<double> grid;
  grid.reserve(kLinear + 2 * kLog + 1);
  for (int k = 0; k <= kLinear; ++k) grid.push_back(-50.0 + 100.0 * k / kLinear);
  // |u| from 1e-8 to 50, log-spaced, both signs.
  const double lo = std::log(1e-8), hi = std::log(50.0);
  for (int k = 0; k < kLog; ++k) {
    const double a = std::exp(lo + (hi - lo) * k / (kLog - 1));
    grid.push_back(a);
    grid.push_back(-a);
  }
  std::sort(grid.begin(), grid.end());
  return grid;
}

}  // namespace sbwc
