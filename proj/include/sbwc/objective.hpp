#pragma once

// Empirical risk  F(w) = (1/n) sum_i f(y_i Phi(w, x_i))  of the two-layer
// network, with gradient, Hessian-vector products and spectral estimates.
// A leave-one-out objective skips one sample but still divides by n.

#include <memory>
#include <optional>
#include <span>

#include "sbwc/dataset.hpp"
#include "sbwc/lanczos.hpp"
#include "sbwc/loss.hpp"
#include "sbwc/model.hpp"

namespace sbwc {

struct ObjectiveStats {
  double risk = 0.0;
  double fprime = 0.0;        // (1/n) sum |f'(y_i Phi_i)|
  double fdoubleprime = 0.0;  // (1/n) sum f''(y_i Phi_i)
  double grad_norm = 0.0;
  double smoothness = 0.0;    // L_F = c_f (ell^2 R^2 + L R^2 / sqrt(m))
};

struct ValueGrad {
  double risk = 0.0;
  Vec grad;
};

class HessianOperator;

class Objective {
 public:
  Objective(std::shared_ptr<const Dataset> data, LossSpec loss,
            ActivationSpec activation, NetworkShape shape,
            std::optional<int> excluded_index = std::nullopt);

  /// Same data and model with sample i removed (normalization stays 1/n).
  Objective without(int i) const;

  const Dataset& data() const { return *data_; }
  std::shared_ptr<const Dataset> data_ptr() const { return data_; }
  const LossSpec& loss() const { return loss_; }
  const ActivationSpec& activation() const { return act_; }
  const NetworkShape& shape() const { return shape_; }
  std::optional<int> excluded_index() const { return excluded_; }
  int n() const { return data_->n(); }
  double radius() const { return data_->R; }

  /// kappa = L R^2 / sqrt(m), the self-bounded weak convexity constant.
  double kappa() const;
  /// L_F = (ell^2 R^2 + L R^2/sqrt(m)) * max{1, g_f, l_f}. For the logistic
  /// loss this is ell^2 R^2 + L R^2/sqrt(m). Throws DomainError when the loss
  /// lacks a Lipschitz or smoothness constant.
  double smoothness() const;

  /// Phi(w, x_i) for every sample (including an excluded one).
  Eigen::VectorXd outputs(std::span<const double> w) const;
  /// F_i(w) = f(y_i Phi(w, x_i)), unnormalized, for every sample.
  Vec sample_losses(std::span<const double> w) const;

  double risk(std::span<const double> w) const;
  Vec risk_grad(std::span<const double> w) const;
  ValueGrad value_and_grad(std::span<const double> w) const;
  /// Gradient of the single-sample loss F_i.
  Vec sample_grad(std::span<const double> w, int i) const;

  Vec risk_hvp(std::span<const double> w, std::span<const double> v) const;
  /// Caches activation and loss derivatives at w for repeated products.
  HessianOperator hessian(std::span<const double> w) const;

  ObjectiveStats stats(std::span<const double> w) const;

  /// lambda_min of the Hessian at w. Uses the dense eigensolver when
  /// m*d <= dense_limit, Lanczos with full reorthogonalization otherwise.
  EigenEstimate min_eig(std::span<const double> w, double tol = 0.0,
                        std::size_t dense_limit = 400) const;
  /// ||Hessian|| at w (max |eigenvalue|).
  double hessian_norm(std::span<const double> w,
                      std::size_t dense_limit = 400) const;

 private:
  void check(std::span<const double> w) const;
  double weight(int i) const { return excluded_ && *excluded_ == i ? 0.0 : 1.0; }

  std::shared_ptr<const Dataset> data_;
  LossSpec loss_;
  ActivationSpec act_;
  NetworkShape shape_;
  std::optional<int> excluded_;

  friend class HessianOperator;
};

class HessianOperator {
 public:
  std::size_t dim() const { return dim_; }
  void apply(std::span<const double> v, std::span<double> out) const;
  Vec apply(std::span<const double> v) const;
  SymmetricOperator as_operator() const;

 private:
  friend class Objective;
  HessianOperator() = default;

  std::shared_ptr<const Dataset> data_;
  int m_ = 0;
  std::size_t dim_ = 0;
  RowMatrix W_;         // m x d copy of the point
  RowMatrix s1_, s2_;   // n x m: a_j sigma'(z_ij)/sqrt(m), a_j sigma''(z_ij)/sqrt(m)
  Eigen::VectorXd gn_;  // (1/n) f''_i, zero for an excluded sample
  Eigen::VectorXd cv_;  // (1/n) f'_i y_i
};

}  // namespace sbwc
