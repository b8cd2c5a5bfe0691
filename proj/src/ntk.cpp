#include "sbwc/ntk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sbwc {

void DenseFeatures::apply(std::span<const double> w, std::span<double> out) const {
  if (w.size() != dim() || out.size() != static_cast<std::size_t>(rows()))
    throw DimensionError("features apply: size mismatch");
  Eigen::Map<Eigen::VectorXd>(out.data(), rows()) =
      phi_ * Eigen::Map<const Eigen::VectorXd>(w.data(), phi_.cols());
}

void DenseFeatures::adjoint(std::span<const double> c, std::span<double> out) const {
  if (out.size() != dim() || c.size() != static_cast<std::size_t>(rows()))
    throw DimensionError("features adjoint: size mismatch");
  Eigen::Map<Eigen::VectorXd>(out.data(), phi_.cols()) =
      phi_.transpose() * Eigen::Map<const Eigen::VectorXd>(c.data(), rows());
}

NtkFeatures::NtkFeatures(RowMatrix coefficients, RowMatrix X)
    : S_(std::move(coefficients)), X_(std::move(X)) {
  if (S_.rows() != X_.rows()) throw DimensionError("ntk features: row mismatch");
}

void NtkFeatures::apply(std::span<const double> w, std::span<double> out) const {
  if (w.size() != dim() || out.size() != static_cast<std::size_t>(rows()))
    throw DimensionError("features apply: size mismatch");
  const Eigen::Map<const RowMatrix> W(w.data(), S_.cols(), X_.cols());
  const RowMatrix P = X_ * W.transpose();  // n x m
  Eigen::Map<Eigen::VectorXd>(out.data(), rows()) =
      (S_.array() * P.array()).rowwise().sum();
}

void NtkFeatures::adjoint(std::span<const double> c, std::span<double> out) const {
  if (out.size() != dim() || c.size() != static_cast<std::size_t>(rows()))
    throw DimensionError("features adjoint: size mismatch");
  RowMatrix D = S_;
  D.array().colwise() *= Eigen::Map<const Eigen::ArrayXd>(c.data(), rows());
  Eigen::Map<RowMatrix>(out.data(), S_.cols(), X_.cols()).noalias() = D.transpose() * X_;
}

double NtkFeatures::row_norm(int i) const { return X_.row(i).norm() * S_.row(i).norm(); }

Vec NtkFeatures::row(int i) const {
  const auto m = S_.cols(), d = X_.cols();
  Vec out(static_cast<std::size_t>(m * d));
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index k = 0; k < d; ++k) out[j * d + k] = S_(i, j) * X_(i, k);
  return out;
}

RowMatrix NtkFeatures::dense() const {
  RowMatrix out(rows(), static_cast<Eigen::Index>(dim()));
  for (int i = 0; i < rows(); ++i) {
    const Vec r = row(i);
    out.row(i) = Eigen::Map<const Eigen::RowVectorXd>(r.data(), out.cols());
  }
  return out;
}

NtkFeatures ntk_features(const ActivationSpec& spec, const Weights& w0,
                         const Dataset& data) {
  const auto [m, d] = w0.shape();
  if (data.d() != d) throw DimensionError("ntk_features: dataset dimension mismatch");
  RowMatrix S = data.X * w0.matrix().transpose();  // pre-activations, n x m
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
  for (Eigen::Index i = 0; i < S.rows(); ++i)
    for (int j = 0; j < m; ++j)
      S(i, j) = w0.sign(j) * inv_sqrt_m * act_eval_unchecked(spec.kind, S(i, j)).d1;
  return NtkFeatures(std::move(S), data.X);
}

double margin_of(const FeatureMap& features, std::span<const int> y,
                 std::span<const double> w) {
  if (y.size() != static_cast<std::size_t>(features.rows()))
    throw DimensionError("margin: label count mismatch");
  Vec z(features.rows());
  features.apply(w, z);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < z.size(); ++i) best = std::min(best, y[i] * z[i]);
  return best;
}

namespace {

void project_unit_ball(Vec& w) {
  const double nw = norm(w);
  if (nw > 1.0)
    for (double& v : w) v /= nw;
}

}  // namespace

MarginCert ntk_margin(const FeatureMap& features, std::span<const int> y,
                      long max_iters) {
  const int n = features.rows();
  if (n < 1) throw DomainError("ntk_margin: empty feature set");
  if (y.size() != static_cast<std::size_t>(n))
    throw DimensionError("ntk_margin: label count mismatch");
  const std::size_t dim = features.dim();
  double rmax = 0.0;
  for (int i = 0; i < n; ++i) rmax = std::max(rmax, features.row_norm(i));

  MarginCert cert;
  cert.w_star.assign(dim, 0.0);
  cert.gamma_hat = 0.0;
  if (rmax == 0.0 || max_iters < 1) {
    cert.separated = false;
    cert.status = "not separated at this width/seed";
    return cert;
  }

  Vec z(n), c(n), grad(dim);
  auto margins = [&](const Vec& w) {
    features.apply(w, z);
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      z[i] *= y[i];
      worst = std::min(worst, z[i]);
    }
    return worst;
  };
  double best = -std::numeric_limits<double>::infinity();
  auto consider = [&](const Vec& w, double value) {
    if (value > best) {
      best = value;
      cert.w_star = w;
    }
  };

  // Warm start: normalized mean of y_i phi_i.
  Vec w(dim);
  for (int i = 0; i < n; ++i) c[i] = y[i] / static_cast<double>(n);
  features.adjoint(c, w);
  project_unit_ball(w);
  {
    const double nw = norm(w);
    if (nw > 0.0) for (double& v : w) v /= nw;
  }
  consider(w, margins(w));
  long used = 1;

  // Phase one: annealed soft-min, FISTA at each temperature.
  const long phase_one = std::max<long>(1, (max_iters * 4) / 5);
  constexpr int kStages = 12;
  const double tau_hi = 0.1 * rmax, tau_lo = 1e-6 * rmax;
  const long per_stage = std::max<long>(1, phase_one / kStages);
  Vec w_prev = w, ypt(dim);
  for (int stage = 0; stage < kStages && used < max_iters; ++stage) {
    const double tau = tau_hi * std::pow(tau_lo / tau_hi,
                                         static_cast<double>(stage) / (kStages - 1));
    const double step = tau / (rmax * rmax);
    double tk = 1.0;
    w_prev = w;
    for (long k = 0; k < per_stage && used < max_iters; ++k, ++used) {
      const double tk_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
      const double mom = (tk - 1.0) / tk_next;
      for (std::size_t t = 0; t < dim; ++t) ypt[t] = w[t] + mom * (w[t] - w_prev[t]);
      tk = tk_next;
      // Softmax weights of -z/tau at the extrapolated point.
      const double zmin = margins(ypt);
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        c[i] = std::exp(-(z[i] - zmin) / tau);
        total += c[i];
      }
      for (int i = 0; i < n; ++i) c[i] = c[i] * y[i] / total;
      features.adjoint(c, grad);
      w_prev = w;
      w = ypt;
      axpy(step, grad, w);
      project_unit_ball(w);
      consider(w, margins(w));
    }
  }

  // Phase two: projected subgradient on the hard min from the best point.
  w = cert.w_star;
  const double c0 = 0.05 * std::max(best, 1e-3 * rmax) / (rmax * rmax);
  for (long k = 1; used < max_iters; ++k, ++used) {
    const double value = margins(w);
    consider(w, value);
    int arg = 0;
    for (int i = 1; i < n; ++i)
      if (z[i] < z[arg]) arg = i;
    std::fill(c.begin(), c.end(), 0.0);
    c[arg] = y[arg];
    features.adjoint(c, grad);
    axpy(c0 / std::sqrt(static_cast<double>(k)), grad, w);
    project_unit_ball(w);
  }
  consider(w, margins(w));

  cert.iterations = used;
  cert.gamma_hat = margin_of(features, y, cert.w_star);
  cert.separated = cert.gamma_hat > 0.0;
  cert.status = cert.separated ? "separated" : "not separated at this width/seed";
  return cert;
}

InitBound init_output_bound(const ActivationSpec& spec, const Weights& w0,
                            const Dataset& data, double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw DomainError("init_output_bound: delta must lie in (0, 1)");
  const Eigen::VectorXd phi = forward_batch(spec, w0, data.X);
  InitBound b;
  b.C = phi.cwiseAbs().maxCoeff();
  b.delta = delta;
  b.theoretical = spec.ell * data.R * std::sqrt(2.0 * std::log(2.0 * data.n() / delta));
  return b;
}

}  // namespace sbwc
