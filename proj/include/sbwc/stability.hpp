#pragma once

// Leave-one-out model stability and Monte-Carlo generalization gaps.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sbwc/trainer.hpp"

namespace sbwc {

/// Summary of the per-step check along (w_t, w_t^{-i}):
///   ||(w_t - eta grad F^{-i}(w_t)) - (w_t^{-i} - eta grad F^{-i}(w_t^{-i}))||
///     <= (1 + 2 eta kappa max{F^{-i}(w_t), F^{-i}(w_t^{-i})}) ||w_t - w_t^{-i}||
/// A step counts as applicable when sqrt(m) >= L R^2 ||w_t - w_t^{-i}||^2.
struct ExpansionSummary {
  long steps = 0;
  long applicable = 0;
  long failures = 0;
  double worst_slack = 0.0;  // over applicable steps
  int worst_i = -1;
  long worst_t = -1;
};

struct LooOptions {
  int jobs = 1;
  /// Requires a full run with a checkpoint at every step.
  bool check_expansion = false;
};

struct LooRuns {
  std::vector<Vec> weights;         // w_T^{-i}
  std::vector<TrainTrace> traces;
  ExpansionSummary expansion;
};

/// n GD runs on F^{-i}, each from the full run's w0 with its step size and
/// horizon.
LooRuns loo_train_all(const Objective& obj, const TrainTrace& full,
                      const LooOptions& opts = {});

struct ModelStability {
  std::vector<double> distances;
  double average = 0.0;
};

ModelStability model_stability(std::span<const double> w_T, const std::vector<Vec>& loo);

/// (2 eta ell R / n) (F(w0) + T Reg) with Reg the trace regret.
double stability_bound(const TrainTrace& trace, double ell, double R, int n);

struct StabilityReport {
  ModelStability stability;
  double bound = 0.0;
  double reg = 0.0;
  double reg_loo = 0.0;
  double eta = 0.0;
  long T = 0;
  int n = 0;
  double sqrt_m = 0.0;
  double width1_required = 0.0;  // 4 L R^2 max_t,i ||w_t - w0||^2
  bool width1_ok = false;
  double width2_required = 0.0;  // 6 L R^2 eta T max{Reg, Reg_loo}
  bool width2_ok = false;
  ExpansionSummary expansion;

  bool bound_holds() const { return stability.average <= bound; }
};

StabilityReport stability_report(const Objective& obj, const TrainTrace& full,
                                 const LooRuns& loo);

enum class ScenarioKind { xor_data, linsep };

struct GapScenario {
  ScenarioKind kind = ScenarioKind::linsep;
  int d = 10;
  double gamma = 0.5;  // linsep margin
  ActivationSpec activation = ActivationSpec::tanh();
  LossSpec loss = LossSpec::logistic();
  int m = 256;
  int n = 32;
  long T = 32;
  StepPolicy step = StepPolicy::smoothness();
  InitSpec init = InitSpec::zero();
  /// Margin and output bound for the NTK form of the bound (XOR scenarios).
  std::optional<double> ntk_gamma;
  std::optional<double> ntk_C;
};

struct GenGapTrial {
  int trial = 0;
  double test_loss = 0.0;
  double train_loss = 0.0;
  double gap = 0.0;
  /// (8 ell^2 R^2 / n)(eta T F(w) + 2||w - w0||^2) with w the linear
  /// certificate at eps = 1/T; NaN when it does not apply.
  double general_rhs = 0.0;
};

struct GenGapReport {
  int n = 0;
  long T = 0;
  int test_size = 0;
  double eta = 0.0;
  std::vector<GenGapTrial> trials;
  double mean_gap = 0.0;
  double std_error = 0.0;
  double g = 0.0;            // g(1/T) used by the bound
  double bound = 0.0;        // 24 ell^2 R^2 g^2 / n, NaN when g is unknown
  double required_width = 0.0;  // 64^2 L^2 R^4 g^4
  bool width_ok = false;
  double general_rhs_mean = 0.0;
};

/// Resamples `trials` training sets of size n, trains on each, and measures
/// the gap against one held-out set of test_size fresh draws. Streams:
/// "direction" (linsep v*), "trials" (train sets), "heldout", "init".
/// Throws DomainError when trials < 5.
GenGapReport gen_gap_estimate(const GapScenario& scenario, int trials, int test_size,
                              std::uint64_t seed, int jobs = 1);

}  // namespace sbwc
