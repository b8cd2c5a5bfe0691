#pragma once

// Tangent features phi_i = grad_w Phi(w0, x_i) at initialization, the hard
// margin  max_{||w|| <= 1} min_i y_i <phi_i, w>  over them, and the output
// bound at initialization.

#include <span>
#include <string>

#include "sbwc/dataset.hpp"
#include "sbwc/model.hpp"

namespace sbwc {

/// Rows phi_1..phi_n of a linear feature map, accessed through products.
class FeatureMap {
 public:
  virtual ~FeatureMap() = default;
  virtual int rows() const = 0;
  virtual std::size_t dim() const = 0;
  /// out_i = <phi_i, w>
  virtual void apply(std::span<const double> w, std::span<double> out) const = 0;
  /// out = sum_i c_i phi_i
  virtual void adjoint(std::span<const double> c, std::span<double> out) const = 0;
  virtual double row_norm(int i) const = 0;
};

class DenseFeatures final : public FeatureMap {
 public:
  explicit DenseFeatures(RowMatrix rows) : phi_(std::move(rows)) {}
  int rows() const override { return static_cast<int>(phi_.rows()); }
  std::size_t dim() const override { return static_cast<std::size_t>(phi_.cols()); }
  void apply(std::span<const double> w, std::span<double> out) const override;
  void adjoint(std::span<const double> c, std::span<double> out) const override;
  double row_norm(int i) const override { return phi_.row(i).norm(); }
  const RowMatrix& matrix() const { return phi_; }

 private:
  RowMatrix phi_;
};

/// Tangent features in factored form: block j of phi_i is s_ij x_i with
/// s_ij = a_j sigma'(<w0_j, x_i>) / sqrt(m). Storage is n*m + n*d instead of
/// n*m*d.
class NtkFeatures final : public FeatureMap {
 public:
  NtkFeatures(RowMatrix coefficients, RowMatrix X);
  int rows() const override { return static_cast<int>(X_.rows()); }
  std::size_t dim() const override {
    return static_cast<std::size_t>(S_.cols() * X_.cols());
  }
  void apply(std::span<const double> w, std::span<double> out) const override;
  void adjoint(std::span<const double> c, std::span<double> out) const override;
  double row_norm(int i) const override;

  /// phi_i as a flat vector of length m*d.
  Vec row(int i) const;
  /// The explicit n x (m*d) matrix.
  RowMatrix dense() const;
  const RowMatrix& coefficients() const { return S_; }

 private:
  RowMatrix S_;  // n x m
  RowMatrix X_;  // n x d
};

NtkFeatures ntk_features(const ActivationSpec& spec, const Weights& w0,
                         const Dataset& data);

struct MarginCert {
  Vec w_star;           // ||w_star|| <= 1
  double gamma_hat = 0.0;  // min_i y_i <phi_i, w_star>, recomputed exactly
  long iterations = 0;
  bool separated = false;  // gamma_hat > 0
  std::string status;
};

/// Lower bound on the hard margin. Phase one runs accelerated projected
/// ascent on the soft-min  -tau log sum_i exp(-y_i <phi_i, w> / tau)  with
/// tau annealed geometrically; phase two runs projected subgradient steps
/// c/sqrt(k) on the hard min. The best feasible iterate is returned, so
/// gamma_hat never exceeds the true optimum.
MarginCert ntk_margin(const FeatureMap& features, std::span<const int> y,
                      long max_iters = 2000);

/// Recomputes min_i y_i <phi_i, w>.
double margin_of(const FeatureMap& features, std::span<const int> y,
                 std::span<const double> w);

struct InitBound {
  double C = 0.0;            // max_i |Phi(w0, x_i)|
  double theoretical = 0.0;  // ell R sqrt(2 log(2 n / delta))
  double delta = 0.0;
};

InitBound init_output_bound(const ActivationSpec& spec, const Weights& w0,
                            const Dataset& data, double delta);

}  // namespace sbwc
