#include "sbwc/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sbwc/rng.hpp"

namespace sbwc {
namespace {

Vec random_start(std::size_t dim, std::uint64_t seed) {
  Rng rng = make_rng(seed, "lanczos_start");
  std::normal_distribution<double> g;
  Vec v(dim);
  for (double& c : v) c = g(rng);
  const double nv = norm(v);
  for (double& c : v) c /= nv;
  return v;
}

struct RitzPair {
  double theta;
  double residual_bound;
  Vec vector;
  double max_abs_theta;
};

// One Lanczos cycle of length <= k from unit start vector q0.
RitzPair lanczos_cycle(const SymmetricOperator& op, std::size_t dim,
                       const Vec& q0, int k, int& matvecs) {
  std::vector<Vec> Q;
  Q.reserve(k);
  Q.push_back(q0);
  std::vector<double> alpha, beta;
  Vec w(dim);
  double last_beta = 0.0;
  for (int j = 0; j < k; ++j) {
    op(Q[j], w);
    ++matvecs;
    const double a = dot(Q[j], w);
    alpha.push_back(a);
    // Full reorthogonalization, two passes.
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& q : Q) axpy(-dot(q, w), q, w);
    const double b = norm(w);
    last_beta = b;
    if (j + 1 == k || b <= 1e-14 * std::max(1.0, std::abs(a))) break;
    beta.push_back(b);
    Vec next(dim);
    for (std::size_t t = 0; t < dim; ++t) next[t] = w[t] / b;
    Q.push_back(std::move(next));
  }
  const int m = static_cast<int>(alpha.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (int j = 0; j < m; ++j) T(j, j) = alpha[j];
  for (int j = 0; j + 1 < m; ++j) T(j, j + 1) = T(j + 1, j) = beta[j];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  const Eigen::VectorXd y = es.eigenvectors().col(0);
  RitzPair out;
  out.theta = es.eigenvalues()[0];
  out.max_abs_theta = es.eigenvalues().cwiseAbs().maxCoeff();
  out.residual_bound = std::abs(last_beta * y[m - 1]);
  out.vector.assign(dim, 0.0);
  for (int j = 0; j < m; ++j) axpy(y[j], Q[j], out.vector);
  const double nv = norm(out.vector);
  for (double& c : out.vector) c /= nv;
  return out;
}

}  // namespace

EigenEstimate lanczos_min_eig(const SymmetricOperator& op, std::size_t dim,
                              const LanczosOptions& options) {
  if (dim == 0) throw DimensionError("lanczos: empty operator");
  const std::size_t cap = std::max<std::size_t>(2, options.max_basis_doubles / dim);
  const int k = static_cast<int>(std::min<std::size_t>(
      {dim, static_cast<std::size_t>(options.krylov_dim), cap}));
  EigenEstimate best;
  best.lambda = std::numeric_limits<double>::infinity();
  best.residual = std::numeric_limits<double>::infinity();
  Vec start = random_start(dim, options.seed);
  Vec hv(dim);
  double norm_est = 0.0;
  int matvecs = 0;
  for (int restart = 0; restart <= options.max_restarts; ++restart) {
    RitzPair rp = lanczos_cycle(op, dim, start, k, matvecs);
    norm_est = std::max(norm_est, rp.max_abs_theta);
    const double tol =
        options.tol > 0.0 ? options.tol : 1e-8 * std::max(1.0, norm_est);
    // True residual of the Ritz pair.
    op(rp.vector, hv);
    ++matvecs;
    const double theta = dot(rp.vector, hv);
    double r2 = 0.0;
    for (std::size_t t = 0; t < dim; ++t) {
      const double e = hv[t] - theta * rp.vector[t];
      r2 += e * e;
    }
    const double residual = std::sqrt(r2);
    // Restarting from the Ritz vector keeps theta non-increasing.
    best.lambda = theta;
    best.residual = residual;
    best.norm_estimate = norm_est;
    best.tol = tol;
    best.matvecs = matvecs;
    if (residual <= tol) {
      best.vector = std::move(rp.vector);
      return best;
    }
    start = std::move(rp.vector);
  }
  throw ConvergenceError("lanczos: residual " + std::to_string(best.residual) +
                             " above tolerance " + std::to_string(best.tol),
                         best.lambda, best.residual);
}

EigenEstimate lanczos_max_eig(const SymmetricOperator& op, std::size_t dim,
                              const LanczosOptions& options) {
  SymmetricOperator neg = [&op](std::span<const double> x, std::span<double> y) {
    op(x, y);
    for (double& v : y) v = -v;
  };
  try {
    EigenEstimate e = lanczos_min_eig(neg, dim, options);
    e.lambda = -e.lambda;
    return e;
  } catch (const ConvergenceError& err) {
    throw ConvergenceError(err.what(), -err.best_estimate(), err.residual());
  }
}

double lanczos_norm(const SymmetricOperator& op, std::size_t dim,
                    const LanczosOptions& options) {
  const double lo = lanczos_min_eig(op, dim, options).lambda;
  const double hi = lanczos_max_eig(op, dim, options).lambda;
  return std::max(std::abs(lo), std::abs(hi));
}

double power_iteration_norm(const SymmetricOperator& op, std::size_t dim,
                            int iters, std::uint64_t seed) {
  Vec v = random_start(dim, seed);
  Vec w(dim);
  double sigma = 0.0;
  for (int it = 0; it < iters; ++it) {
    op(v, w);
    sigma = norm(w);
    if (sigma == 0.0) return 0.0;
    for (std::size_t t = 0; t < dim; ++t) v[t] = w[t] / sigma;
  }
  return sigma;
}

Eigen::MatrixXd dense_matrix(const SymmetricOperator& op, std::size_t dim) {
  Eigen::MatrixXd A(dim, dim);
  Vec e(dim, 0.0), col(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    e[c] = 1.0;
    op(e, col);
    e[c] = 0.0;
    for (std::size_t r = 0; r < dim; ++r) A(r, c) = col[r];
  }
  return A;
}

}  // namespace sbwc
