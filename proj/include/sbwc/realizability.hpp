#pragma once

// Explicit weights w_eps with small empirical risk at a known distance from
// initialization.

#include <span>
#include <string>

#include "sbwc/ntk.hpp"
#include "sbwc/objective.hpp"

namespace sbwc {

enum class Construction { linear, ntk };

struct RealizabilityCert {
  Vec w_eps;
  double eps = 1.0;
  double g_eps = 0.0;  // ||w_eps - w0|| as given by the construction formula
  Construction construction = Construction::linear;
  double risk = 0.0;       // measured risk(w_eps)
  bool verified = false;   // risk <= eps
  double required_width = 0.0;
  bool width_condition_ok = false;

  std::string construction_name() const {
    return construction == Construction::linear ? "linear" : "ntk";
  }
};

/// Zero initialization, odd activation. Row j of w_eps is a_j alpha v_star with
/// alpha = 2 log(1/eps) / (gamma sqrt(m)), so that g_eps = 2 log(1/eps)/gamma.
/// Throws DomainError if m < 4 log^2(1/eps), the activation is not odd, or the
/// arguments are out of range.
RealizabilityCert build_realizability_linear(const Objective& obj,
                                             std::span<const double> v_star,
                                             double gamma, double eps);

/// w_eps = w0 + w_star (2C + log(1/eps)) / gamma_hat for a logistic-loss
/// objective. The width condition m >= L^2 R^4 (2C + log(1/eps))^4 / (4 gamma^4 C^2)
/// is evaluated and reported; the certificate is built either way.
/// Throws DomainError when gamma_hat <= 0 or the loss is not logistic.
RealizabilityCert build_realizability_ntk(const Objective& obj,
                                          std::span<const double> w0,
                                          const MarginCert& margin, double C,
                                          double eps);

/// Width required by the NTK construction; +inf when C = 0 and the
/// numerator is positive.
double ntk_realizability_width(double big_l, double R, double gamma, double C,
                               double eps);

}  // namespace sbwc
