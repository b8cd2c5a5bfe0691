#pragma once

// Convex, non-negative, decreasing classification losses f(u) of the margin
// u = y * Phi(w, x), together with the constants they are certified for.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sbwc/error.hpp"

namespace sbwc {

enum class LossKind { logistic, exponential, polytail };

struct LossSpec {
  LossKind kind = LossKind::logistic;
  double beta = 0.0;               // polytail exponent, unused otherwise
  std::optional<double> g_f;       // |f'| <= g_f
  std::optional<double> l_f;       // f'' <= l_f
  std::optional<double> beta_f;    // |f'| <= beta_f * f
  bool second_order_self_bounded = false;  // f'' <= f

  static LossSpec logistic();
  static LossSpec exponential();
  /// Tail f(u) = u^-beta for u >= 1. For u < 1 the curvature decays
  /// exponentially, f''(u) = beta(beta+1) exp((beta+1)(u-1)), which keeps f
  /// C^2 at the junction, convex, decreasing and asymptotically linear with
  /// slope -2 beta. beta_f is certified numerically.
  static LossSpec polytail(double beta);

  /// "logistic", "exp" or "poly:<beta>".
  static LossSpec parse(std::string_view text);
  std::string name() const;
};

struct LossValue {
  double f;
  double d1;
  double d2;
};

LossValue loss_eval(const LossSpec& spec, double u);
LossValue loss_eval_unchecked(const LossSpec& spec, double u) noexcept;

struct LossCertificate {
  bool lipschitz = false;
  bool smooth = false;
  bool self_bounded = false;
  bool second_order_self_bounded = false;
  bool operator==(const LossCertificate&) const = default;
};

/// Evaluates each assumption inequality at every grid point with slack
/// tolerance 1e-12. A flag whose constant is absent is false.
LossCertificate certify_loss(const LossSpec& spec, std::span<const double> grid);

/// 2e5 points on [-50, 50]: half linear, half log-spaced toward both ends.
std::vector<double> default_certification_grid();

}  // namespace sbwc
