#include "sbwc/realizability.hpp"

#include <cmath>
#include <limits>

namespace sbwc {

RealizabilityCert build_realizability_linear(const Objective& obj,
                                             std::span<const double> v_star,
                                             double gamma, double eps) {
  const auto [m, d] = obj.shape();
  if (!obj.activation().odd())
    throw DomainError("linear realizability needs an odd activation");
  if (v_star.size() != static_cast<std::size_t>(d))
    throw DimensionError("linear realizability: v_star has the wrong dimension");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw DomainError("linear realizability: gamma must lie in (0, 1]");
  if (!(eps > 0.0 && eps <= 1.0))
    throw DomainError("linear realizability: eps must lie in (0, 1]");
  const double log_inv = std::log(1.0 / eps);
  const double required = 4.0 * log_inv * log_inv;
  if (static_cast<double>(m) < required)
    throw DomainError("linear realizability: width m = " + std::to_string(m) +
                      " is below 4 log^2(1/eps) = " + std::to_string(required));

  const double alpha = 2.0 * log_inv / (gamma * std::sqrt(static_cast<double>(m)));
  RealizabilityCert cert;
  cert.construction = Construction::linear;
  cert.eps = eps;
  cert.g_eps = 2.0 * log_inv / gamma;
  cert.required_width = required;
  cert.width_condition_ok = true;
  cert.w_eps.assign(static_cast<std::size_t>(m) * d, 0.0);
  for (int j = 0; j < m; ++j) {
    const double s = j < m / 2 ? alpha : -alpha;
    for (int k = 0; k < d; ++k) cert.w_eps[static_cast<std::size_t>(j) * d + k] = s * v_star[k];
  }
  cert.risk = obj.risk(cert.w_eps);
  cert.verified = cert.risk <= eps;
  return cert;
}

double ntk_realizability_width(double big_l, double R, double gamma, double C,
                               double eps) {
  const double a = 2.0 * C + std::log(1.0 / eps);
  const double num = big_l * big_l * std::pow(R, 4) * std::pow(a, 4);
  if (num == 0.0) return 0.0;
  const double den = 4.0 * std::pow(gamma, 4) * C * C;
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return num / den;
}

RealizabilityCert build_realizability_ntk(const Objective& obj,
                                          std::span<const double> w0,
                                          const MarginCert& margin, double C,
                                          double eps) {
  if (obj.loss().kind != LossKind::logistic)
    throw DomainError("NTK realizability is stated for the logistic loss");
  if (!(margin.gamma_hat > 0.0))
    throw DomainError("NTK realizability needs a positive margin");
  if (!(C >= 0.0)) throw DomainError("NTK realizability: C must be non-negative");
  if (!(eps > 0.0 && eps <= 1.0))
    throw DomainError("NTK realizability: eps must lie in (0, 1]");
  if (w0.size() != obj.shape().num_params() || margin.w_star.size() != w0.size())
    throw DimensionError("NTK realizability: dimension mismatch");

  const double gamma = margin.gamma_hat;
  RealizabilityCert cert;
  cert.construction = Construction::ntk;
  cert.eps = eps;
  cert.g_eps = (2.0 * C + std::log(1.0 / eps)) / gamma;
  const double scale = cert.g_eps / norm(margin.w_star);
  cert.w_eps.assign(w0.begin(), w0.end());
  axpy(scale, margin.w_star, cert.w_eps);
  cert.required_width = ntk_realizability_width(obj.activation().big_l, obj.radius(),
                                                gamma, C, eps);
  cert.width_condition_ok = static_cast<double>(obj.shape().m) >= cert.required_width;
  cert.risk = obj.risk(cert.w_eps);
  cert.verified = cert.risk <= eps;
  return cert;
}

}  // namespace sbwc
