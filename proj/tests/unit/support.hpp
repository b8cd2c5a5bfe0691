#pragma once

// Shared oracles for the unit tests: central differences and small random
// instances drawn from a fixed stream.

#include <functional>
#include <memory>
#include <random>

#include "sbwc/objective.hpp"
#include "sbwc/rng.hpp"

namespace sbwc::testing {

inline Vec fd_gradient(const std::function<double(std::span<const double>)>& f,
                       std::span<const double> x, double h = 1e-6) {
  Vec g(x.size()), p(x.begin(), x.end());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double keep = p[k];
    p[k] = keep + h;
    const double up = f(p);
    p[k] = keep - h;
    const double down = f(p);
    p[k] = keep;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Dense Hessian by central differences of an analytic gradient, symmetrized.
inline Eigen::MatrixXd fd_hessian(const std::function<Vec(std::span<const double>)>& grad,
                                  std::span<const double> x, double h = 1e-5) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd H(n, n);
  Vec p(x.begin(), x.end());
  for (Eigen::Index k = 0; k < n; ++k) {
    const double keep = p[k];
    p[k] = keep + h;
    const Vec up = grad(p);
    p[k] = keep - h;
    const Vec down = grad(p);
    p[k] = keep;
    for (Eigen::Index r = 0; r < n; ++r) H(r, k) = (up[r] - down[r]) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

inline Vec gaussian_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vec v(n);
  for (double& x : v) x = nd(rng);
  return v;
}

/// Random dataset with rows inside the unit ball and +-1 labels.
inline std::shared_ptr<const Dataset> random_dataset(Rng& rng, int n, int d) {
  auto data = std::make_shared<Dataset>();
  data->X = RowMatrix(n, d);
  data->y.resize(n);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int i = 0; i < n; ++i) {
    Vec x = gaussian_vec(rng, d);
    const double r = norm(x);
    const double target = 0.3 + 0.7 * std::abs(unit(rng));
    for (int k = 0; k < d; ++k) data->X(i, k) = x[k] / r * target;
    data->y[i] = unit(rng) < 0 ? -1 : 1;
  }
  data->R = 1.0;
  data->provenance = "random";
  return data;
}

}  // namespace sbwc::testing
