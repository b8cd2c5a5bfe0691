#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "sbwc/linalg.hpp"

namespace sbwc {

/// y = A x for a symmetric operator A.
using SymmetricOperator =
    std::function<void(std::span<const double> x, std::span<double> y)>;

struct LanczosOptions {
  int krylov_dim = 200;
  int max_restarts = 30;
  std::uint64_t seed = 0x5eed;
  /// Target residual ||A v - lambda v||. Non-positive means
  /// 1e-8 * max(1, estimated ||A||).
  double tol = 0.0;
  /// Memory cap for the Krylov basis, in doubles.
  std::size_t max_basis_doubles = std::size_t{1} << 25;
};

struct EigenEstimate {
  double lambda = 0.0;     // extreme eigenvalue estimate
  double residual = 0.0;   // ||A v - lambda v|| for the returned unit v
  double norm_estimate = 0.0;  // max |Ritz value| seen
  double tol = 0.0;        // tolerance actually used
  int matvecs = 0;
  Vec vector;
};

/// Smallest eigenvalue by restarted Lanczos with full reorthogonalization.
/// Throws ConvergenceError (carrying the best estimate) when the residual
/// stays above tol after max_restarts.
EigenEstimate lanczos_min_eig(const SymmetricOperator& op, std::size_t dim,
                              const LanczosOptions& options = {});

/// Largest eigenvalue (apply lanczos_min_eig to -A).
EigenEstimate lanczos_max_eig(const SymmetricOperator& op, std::size_t dim,
                              const LanczosOptions& options = {});

/// Operator norm max(|lambda_min|, |lambda_max|).
double lanczos_norm(const SymmetricOperator& op, std::size_t dim,
                    const LanczosOptions& options = {});

/// Plain power iteration; for symmetric A returns an estimate of
/// max |lambda| after `iters` steps.
double power_iteration_norm(const SymmetricOperator& op, std::size_t dim,
                            int iters, std::uint64_t seed);

/// Materializes A column by column (dim applications).
Eigen::MatrixXd dense_matrix(const SymmetricOperator& op, std::size_t dim);

}  // namespace sbwc
