#include "sbwc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sbwc {
namespace {

constexpr std::size_t kNeuronChunk = 2048;

double stable_sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

struct GridMax {
  double d1;
  double d2;
};

// Max of |sigma'| and |sigma''| over [-50, 50]: a 2e5-point grid, then a
// golden-section polish around each grid argmax. A relative pad of 1e-12
// absorbs the polish residual.
GridMax certify_by_grid(ActivationKind kind) {
  constexpr int kPoints = 200001;
  constexpr double lo = -50.0, hi = 50.0;
  const double h = (hi - lo) / (kPoints - 1);
  double best1 = 0.0, best2 = 0.0, arg1 = lo, arg2 = lo;
  for (int k = 0; k < kPoints; ++k) {
    const double u = lo + h * k;
    const auto v = act_eval_unchecked(kind, u);
    if (std::abs(v.d1) > best1) best1 = std::abs(v.d1), arg1 = u;
    if (std::abs(v.d2) > best2) best2 = std::abs(v.d2), arg2 = u;
  }
  auto polish = [&](double center, auto&& fn) {
    double a = center - h, b = center + h;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 100; ++it) {
      const double c = b - g * (b - a), e = a + g * (b - a);
      if (fn(c) > fn(e)) b = e; else a = c;
    }
    return fn(0.5 * (a + b));
  };
  best1 = std::max(best1, polish(arg1, [&](double u) {
    return std::abs(act_eval_unchecked(kind, u).d1);
  }));
  best2 = std::max(best2, polish(arg2, [&](double u) {
    return std::abs(act_eval_unchecked(kind, u).d2);
  }));
  return {best1 * (1.0 + 1e-12), best2 * (1.0 + 1e-12)};
}

}  // namespace

ActivationSpec ActivationSpec::softplus() {
  return {ActivationKind::softplus, 1.0, 0.25, 0.1};
}

ActivationSpec ActivationSpec::tanh() {
  return {ActivationKind::tanh, 1.0, 4.0 / (3.0 * std::sqrt(3.0)),
          std::nullopt};
}

ActivationSpec ActivationSpec::gelu() {
  static const GridMax cert = certify_by_grid(ActivationKind::gelu);
  return {ActivationKind::gelu, cert.d1, cert.d2, std::nullopt};
}

ActivationSpec ActivationSpec::parse(std::string_view name) {
  if (name == "softplus") return softplus();
  if (name == "tanh") return tanh();
  if (name == "gelu") return gelu();
  throw ParseError("unknown activation '" + std::string(name) +
                   "' (expected softplus, tanh or gelu)");
}

std::string ActivationSpec::name() const {
  switch (kind) {
    case ActivationKind::softplus: return "softplus";
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::gelu: return "gelu";
  }
  return "?";
}

ActivationValue act_eval_unchecked(ActivationKind kind, double u) noexcept {
  switch (kind) {
    case ActivationKind::softplus: {
      const double sp =
          u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
      const double s = stable_sigmoid(u);
      // 1 - s computed without cancellation.
      const double sc = stable_sigmoid(-u);
      return {sp, s, s * sc};
    }
    case ActivationKind::tanh: {
      const double t = std::tanh(u);
      const double d1 = 1.0 - t * t;
      return {t, d1, -2.0 * t * d1};
    }
    case ActivationKind::gelu: {
      const double cdf = 0.5 * std::erfc(-u / std::numbers::sqrt2);
      const double pdf =
          std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
      return {u * cdf, cdf + u * pdf, pdf * (2.0 - u * u)};
    }
  }
  return {0.0, 0.0, 0.0};
}

ActivationValue act_eval(const ActivationSpec& spec, double u) {
  if (!std::isfinite(u)) throw DomainError("act_eval: non-finite input");
  return act_eval_unchecked(spec.kind, u);
}

NetworkShape::NetworkShape(int m_, int d_) : m(m_), d(d_) {
  if (m <= 0 || m % 2 != 0)
    throw DomainError("shape.m must be a positive even integer, got " +
                      std::to_string(m));
  if (d <= 0)
    throw DomainError("shape.d must be positive, got " + std::to_string(d));
}

Weights::Weights(NetworkShape shape) : shape_(shape), w_(shape.num_params()) {}

Weights::Weights(NetworkShape shape, Vec w) : shape_(shape), w_(std::move(w)) {
  if (w_.size() != shape_.num_params())
    throw DimensionError("weights: expected " +
                         std::to_string(shape_.num_params()) +
                         " entries, got " + std::to_string(w_.size()));
  if (!all_finite(w_)) throw DomainError("weights: non-finite entry");
}

std::span<const double> Weights::row(int j) const {
  return std::span<const double>(w_).subspan(
      static_cast<std::size_t>(j) * shape_.d, shape_.d);
}

Eigen::VectorXd Weights::signs() const {
  Eigen::VectorXd a(shape_.m);
  for (int j = 0; j < shape_.m; ++j) a[j] = sign(j);
  return a;
}

namespace {

void check_input(const Weights& weights, std::span<const double> x) {
  if (static_cast<int>(x.size()) != weights.shape().d)
    throw DimensionError("input has dimension " + std::to_string(x.size()) +
                         ", network expects " +
                         std::to_string(weights.shape().d));
}

}  // namespace

double forward(const ActivationSpec& spec, const Weights& weights,
               std::span<const double> x) {
  check_input(weights, x);
  const int m = weights.shape().m;
  double s = 0.0;
  for (int j = 0; j < m; ++j)
    s += weights.sign(j) *
         act_eval_unchecked(spec.kind, dot(weights.row(j), x)).sigma;
  return s / std::sqrt(static_cast<double>(m));
}

Vec model_grad(const ActivationSpec& spec, const Weights& weights,
               std::span<const double> x) {
  check_input(weights, x);
  const auto [m, d] = weights.shape();
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
  Vec g(weights.shape().num_params());
  for (int j = 0; j < m; ++j) {
    const double c = inv_sqrt_m * weights.sign(j) *
                     act_eval_unchecked(spec.kind, dot(weights.row(j), x)).d1;
    for (int k = 0; k < d; ++k) g[static_cast<std::size_t>(j) * d + k] = c * x[k];
  }
  return g;
}

Vec model_hvp(const ActivationSpec& spec, const Weights& weights,
              std::span<const double> x, std::span<const double> v) {
  check_input(weights, x);
  if (v.size() != weights.shape().num_params())
    throw DimensionError("model_hvp: direction has wrong length");
  const auto [m, d] = weights.shape();
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
  Vec out(v.size());
  for (int j = 0; j < m; ++j) {
    const auto vj = v.subspan(static_cast<std::size_t>(j) * d, d);
    const double c = inv_sqrt_m * weights.sign(j) *
                     act_eval_unchecked(spec.kind, dot(weights.row(j), x)).d2 *
                     dot(x, vj);
    for (int k = 0; k < d; ++k) out[static_cast<std::size_t>(j) * d + k] = c * x[k];
  }
  return out;
}

Eigen::VectorXd forward_batch(const ActivationSpec& spec,
                              const Weights& weights, const RowMatrix& X) {
  const auto [m, d] = weights.shape();
  if (X.cols() != d) throw DimensionError("forward_batch: feature dimension");
  const auto W = weights.matrix();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  RowMatrix Z;
  for (std::size_t j0 = 0; j0 < static_cast<std::size_t>(m); j0 += kNeuronChunk) {
    const auto cols = static_cast<Eigen::Index>(
        std::min<std::size_t>(kNeuronChunk, m - j0));
    Z.noalias() = X * W.middleRows(j0, cols).transpose();
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < cols; ++c)
        s += weights.sign(static_cast<int>(j0 + c)) *
             act_eval_unchecked(spec.kind, Z(i, c)).sigma;
      out[i] += s;
    }
  }
  out *= 1.0 / std::sqrt(static_cast<double>(m));
  return out;
}

}  // namespace sbwc
