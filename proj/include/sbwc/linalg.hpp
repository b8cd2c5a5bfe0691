#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sbwc/error.hpp"

namespace sbwc {

using Vec = std::vector<double>;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: size mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("distance: size mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return std::sqrt(s);
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw DimensionError("axpy: size mismatch");
  for (std::size_t k = 0; k < x.size(); ++k) y[k] += alpha * x[k];
}

inline void scale(double alpha, std::span<double> x) {
  for (double& v : x) v *= alpha;
}

// (1 - alpha) * a + alpha * b
inline Vec lerp(std::span<const double> a, std::span<const double> b,
                double alpha) {
  if (a.size() != b.size()) throw DimensionError("lerp: size mismatch");
  Vec out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k)
    out[k] = (1.0 - alpha) * a[k] + alpha * b[k];
  return out;
}

inline bool all_finite(std::span<const double> a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace sbwc
