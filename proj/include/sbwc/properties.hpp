#pragma once

// Inequality checkers. Each returns a report with the worst measured slack
// (bound minus measured value) and the inputs that achieved it.

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "sbwc/realizability.hpp"
#include "sbwc/trainer.hpp"

namespace sbwc {

enum class PropertyStatus { holds, fails, not_applicable };

std::string status_name(PropertyStatus s);

struct PropertyReport {
  std::string name;
  PropertyStatus status = PropertyStatus::not_applicable;
  double worst_slack = 0.0;
  double tolerance = 0.0;
  nlohmann::json witness = nlohmann::json::object();
  nlohmann::json params = nlohmann::json::object();
  std::string note;

  bool holds() const { return status == PropertyStatus::holds; }
  bool applicable() const { return status != PropertyStatus::not_applicable; }
  bool failed() const { return status == PropertyStatus::fails; }
};

nlohmann::json to_json(const PropertyReport& r);

/// Default slack tolerance 1e-10 * (1 + |rhs|).
inline double slack_tolerance(double rhs) { return 1e-10 * (1.0 + std::abs(rhs)); }

/// Risk and loss-derivative averages along w(alpha) = (1 - alpha) w1 + alpha w2.
/// Pre-activations are affine in alpha, so each evaluation costs O(n m).
class SegmentEvaluator {
 public:
  struct Point {
    double risk = 0.0;
    double fprime = 0.0;        // (1/n) sum |f'|
    double fdoubleprime = 0.0;  // (1/n) sum f''
  };
  SegmentEvaluator(const Objective& obj, std::span<const double> w1,
                   std::span<const double> w2);
  Point at(double alpha) const;
  double risk(double alpha) const { return at(alpha).risk; }

 private:
  const Objective& obj_;
  RowMatrix z1_, dz_;
};

struct SegmentMax {
  double value = 0.0;
  double alpha = 0.0;
};

/// Max of fn over grid_size + 1 equispaced points of [0, 1], refined by
/// golden-section search on the two cells around the best grid point.
SegmentMax segment_max(const std::function<double(double)>& fn, int grid_size);

/// lambda_min(Hessian) >= -kappa F(w). kappa_scale multiplies kappa; it
/// exists for negative controls (-1 must make the check fail).
PropertyReport check_sbwc(const Objective& obj, std::span<const double> w,
                          double tol = 1e-10, std::size_t dense_limit = 400,
                          double kappa_scale = 1.0);

/// ||grad F_i(w)|| <= ell R F_i(w) for every sample.
PropertyReport check_gradient_self_bound(const Objective& obj,
                                         std::span<const double> w,
                                         double tol = 1e-10);

struct GlqcOptions {
  int grid_size = 1000;
  int fine_grid_size = 10000;
  /// Unset: tau = (1 - kappa D^2/2)^{-1}, applicable iff kappa D^2 < 2.
  /// Set: bound lambda/(lambda-1) times the endpoint max, applicable iff
  /// sqrt(m) >= lambda L R^2 D^2 / 2.
  std::optional<double> lambda;
  /// Grid refinement must agree to this relative level before holds is set.
  double max_refinement_residual = 0.01;
};

PropertyReport check_glqc(const Objective& obj, std::span<const double> w1,
                          std::span<const double> w2, const GlqcOptions& opts = {});

enum class ExpansivenessForm {
  self_bounded,  // coefficient 1 + eta kappa max_alpha F(w_alpha)
  general,       // max_alpha eta kappa F'(w_alpha) + max{1, eta ell^2 R^2 F''(w_alpha)}
};

PropertyReport check_expansiveness(const Objective& obj, std::span<const double> w,
                                   std::span<const double> w_prime, double eta,
                                   int grid_size = 1000,
                                   ExpansivenessForm form = ExpansivenessForm::self_bounded);

/// Regret, last-iterate and iterate-distance bounds against a realizability
/// certificate (w0 of the certificate must equal trace.w0):
///   (1/T) sum_t F(w_t) <= 2 F(w_eps) + 5 g^2 / (2 eta T)
///   F(w_T)             <= 2 eps + 5 g^2 / (2 eta T)
///   ||w_t - w0||       <= 4 g
/// Applicable when m >= 18^2 L^2 R^4 g^4, eta <= 1/L_F and
/// g^2 >= max{eta T F(w_eps), eta F(w0)}.
PropertyReport check_train_bounds(const Objective& obj, const TrainTrace& trace,
                                  const RealizabilityCert& cert);

/// F(w_T) <= 5 (2C + log T)^2 / (gamma^2 eta T), applicable when
/// m >= 64^2 L^2 R^4 (2C + log T)^4 / gamma^4 and eta <= min{3, 1/L_F}.
PropertyReport check_train_bounds_ntk(const Objective& obj, const TrainTrace& trace,
                                      double C, double gamma);

/// Fraction of samples with y_i Phi(w, x_i) <= 0.
double check_interpolation(const ActivationSpec& spec, const Weights& w,
                           const Dataset& data);

}  // namespace sbwc
