#pragma once

// Full-batch gradient descent  w_{t+1} = w_t - eta * grad F(w_t).

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>

#include "sbwc/objective.hpp"

namespace sbwc {

enum class StepPolicyKind { fixed, smoothness, self_bounded, ntk };

struct StepPolicy {
  StepPolicyKind kind = StepPolicyKind::smoothness;
  double eta = 0.0;  // used by `fixed` only

  static StepPolicy fixed(double eta) { return {StepPolicyKind::fixed, eta}; }
  static StepPolicy smoothness() { return {StepPolicyKind::smoothness, 0.0}; }
  static StepPolicy self_bounded() { return {StepPolicyKind::self_bounded, 0.0}; }
  static StepPolicy ntk() { return {StepPolicyKind::ntk, 0.0}; }

  /// "fixed:<eta>", "smoothness", "self_bounded" or "ntk".
  static StepPolicy parse(std::string_view text);
  std::string name() const;
};

enum class InitKind { zero, gaussian, explicit_weights };

struct InitSpec {
  InitKind kind = InitKind::zero;
  double scale = 1.0;  // gaussian standard deviation
  Vec weights;         // explicit_weights only

  static InitSpec zero() { return {}; }
  static InitSpec gaussian(double scale = 1.0) { return {InitKind::gaussian, scale, {}}; }
  static InitSpec explicit_weights(Vec w) {
    return {InitKind::explicit_weights, 1.0, std::move(w)};
  }
  /// "zero", "gaussian" or "gaussian:<scale>".
  static InitSpec parse(std::string_view text);
  std::string name() const;
};

struct GDConfig {
  StepPolicy step;
  long T = 1;
  InitSpec init;
  std::uint64_t seed = 0;
  /// Store full iterates every record_every steps (plus t = 0 and t = T).
  /// Zero disables intermediate checkpoints.
  long record_every = 0;
  /// Abort when the risk exceeds this multiple of F(w_0).
  double divergence_factor = 1e3;
};

struct TrainTrace {
  double eta = 0.0;
  long T = 0;
  std::vector<double> risk;       // F(w_t), t = 0..T
  std::vector<double> grad_norm;  // ||grad F(w_t)||
  std::vector<double> dist_init;  // ||w_t - w_0||
  Vec w0;
  Vec final_weights;
  std::map<long, Vec> checkpoints;

  /// (1/T) sum_{t=1..T} F(w_t); zero when T = 0.
  double regret() const;
};

/// Deterministic given (shape, init, seed); gaussian entries are iid
/// N(0, scale^2) drawn from the "init" sub-stream.
Weights init_weights(NetworkShape shape, const InitSpec& init, std::uint64_t seed);

/// Step size for a policy at initialization w0.
///   smoothness:   1 / L_F
///   self_bounded: 0.99 / (R^2 F(w0)) * min{1/(ell^2 + L), 1/(sqrt(L) ell)}
///   ntk:          min{3, 1 / L_F}
double resolve_step(const Objective& obj, std::span<const double> w0,
                    const StepPolicy& policy);

/// Called after each evaluation: (t, w_t, F(w_t), grad F(w_t)).
using TrainObserver = std::function<void(long t, std::span<const double> w,
                                         double risk, std::span<const double> grad)>;

/// Runs T steps of GD. Throws DivergenceError carrying the iteration index
/// when the risk becomes non-finite or exceeds divergence_factor * F(w_0).
TrainTrace train(const Objective& obj, const GDConfig& config,
                 const TrainObserver& observer = {});

/// Same, from an explicit starting point and step size.
TrainTrace train_from(const Objective& obj, Vec w0, double eta, long T,
                      long record_every = 0, double divergence_factor = 1e3,
                      const TrainObserver& observer = {});

/// min_t [F(w_t) - (eta/2)||grad F(w_t)||^2 - F(w_{t+1})]; +inf for T = 0.
double verify_descent(const TrainTrace& trace, double eta);

inline constexpr double kDescentTolerance = 1e-12;

}  // namespace sbwc
