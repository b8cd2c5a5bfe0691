#pragma once

// Two-layer network with a fixed, balanced +-1 output layer:
//
//   Phi(w, x) = (1/sqrt(m)) * sum_j a_j * sigma(<w_j, x>)
//
// Only the first layer w (m rows of length d, stored row-major in one flat
// vector) is trainable.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sbwc/linalg.hpp"

namespace sbwc {

enum class ActivationKind { softplus, tanh, gelu };

/// Smooth activation with certified bounds |sigma'| <= ell, |sigma''| <= big_l.
/// mu is the local strong-convexity constant on [-2, 2] (softplus only).
struct ActivationSpec {
  ActivationKind kind = ActivationKind::tanh;
  double ell = 1.0;
  double big_l = 0.0;
  std::optional<double> mu;

  static ActivationSpec softplus();
  static ActivationSpec tanh();
  /// Constants are obtained by maximizing |sigma'| and |sigma''| on a dense
  /// grid over [-50, 50] (computed once, then cached).
  static ActivationSpec gelu();

  static ActivationSpec parse(std::string_view name);
  std::string name() const;
  bool odd() const { return kind == ActivationKind::tanh; }
};

struct ActivationValue {
  double sigma;
  double d1;
  double d2;
};

/// Returns (sigma(u), sigma'(u), sigma''(u)). Throws DomainError for
/// non-finite u.
ActivationValue act_eval(const ActivationSpec& spec, double u);

/// Unchecked variant for inner loops.
ActivationValue act_eval_unchecked(ActivationKind kind, double u) noexcept;

struct NetworkShape {
  int m = 2;  // hidden width, positive and even
  int d = 1;  // input dimension

  NetworkShape() = default;
  NetworkShape(int m_, int d_);
  std::size_t num_params() const {
    return static_cast<std::size_t>(m) * static_cast<std::size_t>(d);
  }
  bool operator==(const NetworkShape&) const = default;
};

/// First-layer weights plus the fixed second-layer signs.
/// Neuron j occupies w[j*d, (j+1)*d). Signs are +1 for j < m/2 and -1 after.
class Weights {
 public:
  Weights() = default;
  explicit Weights(NetworkShape shape);  // zero weights
  Weights(NetworkShape shape, Vec w);

  const NetworkShape& shape() const { return shape_; }
  std::span<const double> flat() const { return w_; }
  std::span<double> flat() { return w_; }
  const Vec& vec() const { return w_; }
  Vec& vec() { return w_; }
  std::span<const double> row(int j) const;
  double sign(int j) const { return j < shape_.m / 2 ? 1.0 : -1.0; }
  /// The +-1 signs as a vector of length m.
  Eigen::VectorXd signs() const;

  Eigen::Map<const RowMatrix> matrix() const {
    return {w_.data(), shape_.m, shape_.d};
  }

 private:
  NetworkShape shape_;
  Vec w_;
};

struct Example {
  Vec x;
  int y = 1;
};

/// Phi(w, x).
double forward(const ActivationSpec& spec, const Weights& weights,
               std::span<const double> x);

/// Gradient of Phi with respect to w; block j is
/// (1/sqrt(m)) a_j sigma'(<w_j,x>) x.
Vec model_grad(const ActivationSpec& spec, const Weights& weights,
               std::span<const double> x);

/// Hessian-vector product of Phi with respect to w. The Hessian is block
/// diagonal, block j = (1/sqrt(m)) a_j sigma''(<w_j,x>) x x^T.
Vec model_hvp(const ActivationSpec& spec, const Weights& weights,
              std::span<const double> x, std::span<const double> v);

/// Phi(w, x_i) for every row of X, evaluated in neuron chunks.
Eigen::VectorXd forward_batch(const ActivationSpec& spec,
                              const Weights& weights, const RowMatrix& X);

}  // namespace sbwc
