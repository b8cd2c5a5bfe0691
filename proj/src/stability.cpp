#include "sbwc/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "sbwc/dataset.hpp"
#include "sbwc/parallel.hpp"
#include "sbwc/properties.hpp"
#include "sbwc/realizability.hpp"
#include "sbwc/rng.hpp"

namespace sbwc {

namespace {

struct LooOutcome {
  TrainTrace trace;
  ExpansionSummary expansion;
};

LooOutcome run_one(const Objective& obj, const TrainTrace& full, int i, bool check) {
  const Objective loo = obj.without(i);
  LooOutcome out;
  TrainObserver observer;
  if (check) {
    const double eta = full.eta;
    const double kappa = obj.kappa();
    const double L = obj.activation().big_l, R = obj.radius();
    const double sqrt_m = std::sqrt(static_cast<double>(obj.shape().m));
    observer = [&, eta, kappa, L, R, sqrt_m](long t, std::span<const double> w_loo,
                                             double risk_loo, std::span<const double> grad_loo) {
      if (t >= full.T) return;
      const Vec& w_full = full.checkpoints.at(t);
      const ValueGrad at_full = loo.value_and_grad(w_full);
      Vec a = w_full, b(w_loo.begin(), w_loo.end());
      axpy(-eta, at_full.grad, a);
      axpy(-eta, grad_loo, b);
      const double lhs = distance(a, b);
      const double dist = distance(w_full, w_loo);
      const double coef = 1.0 + 2.0 * eta * kappa * std::max(at_full.risk, risk_loo);
      const double rhs = coef * dist;
      const double slack = rhs - lhs;
      auto& e = out.expansion;
      ++e.steps;
      if (sqrt_m < L * R * R * dist * dist) return;
      ++e.applicable;
      if (slack < -slack_tolerance(rhs)) ++e.failures;
      if (e.applicable == 1 || slack < e.worst_slack) {
        e.worst_slack = slack;
        e.worst_i = i;
        e.worst_t = t;
      }
    };
  }
  out.trace = train_from(loo, full.w0, full.eta, full.T, 0,
                         std::numeric_limits<double>::infinity(), observer);
  return out;
}

}  // namespace

LooRuns loo_train_all(const Objective& obj, const TrainTrace& full, const LooOptions& opts) {
  if (full.w0.size() != obj.shape().num_params())
    throw DimensionError("loo_train_all: trace does not match the objective");
  if (opts.check_expansion)
    for (long t = 0; t <= full.T; ++t)
      if (!full.checkpoints.count(t))
        throw DomainError("loo_train_all: expansion check needs every iterate of the full run");
  auto outcomes = parallel_map(static_cast<std::size_t>(obj.n()), opts.jobs,
                               [&](std::size_t i) {
                                 return run_one(obj, full, static_cast<int>(i),
                                                opts.check_expansion);
                               });
  LooRuns runs;
  for (auto& o : outcomes) {
    auto& e = runs.expansion;
    const auto& x = o.expansion;
    if (x.applicable > 0 && (e.applicable == 0 || x.worst_slack < e.worst_slack)) {
      e.worst_slack = x.worst_slack;
      e.worst_i = x.worst_i;
      e.worst_t = x.worst_t;
    }
    e.steps += x.steps;
    e.applicable += x.applicable;
    e.failures += x.failures;
    runs.weights.push_back(o.trace.final_weights);
    runs.traces.push_back(std::move(o.trace));
  }
  return runs;
}

ModelStability model_stability(std::span<const double> w_T, const std::vector<Vec>& loo) {
  ModelStability s;
  s.distances.reserve(loo.size());
  for (const Vec& w : loo) {
    if (w.size() != w_T.size()) throw DimensionError("model_stability: length mismatch");
    s.distances.push_back(distance(w_T, w));
  }
  if (!loo.empty())
    s.average = std::accumulate(s.distances.begin(), s.distances.end(), 0.0) /
                static_cast<double>(loo.size());
  return s;
}

double stability_bound(const TrainTrace& trace, double ell, double R, int n) {
  if (n < 1) throw DomainError("stability_bound: n must be positive");
  if (trace.risk.empty()) throw DomainError("stability_bound: empty trace");
  const double sum = trace.regret() * static_cast<double>(trace.T);
  return 2.0 * trace.eta * ell * R / n * (trace.risk.front() + sum);
}

StabilityReport stability_report(const Objective& obj, const TrainTrace& full,
                                 const LooRuns& loo) {
  StabilityReport r;
  r.n = obj.n();
  r.T = full.T;
  r.eta = full.eta;
  r.stability = model_stability(full.final_weights, loo.weights);
  r.bound = stability_bound(full, obj.activation().ell, obj.radius(), r.n);
  r.reg = full.regret();
  double max_sq = 0.0;
  auto track = [&](const TrainTrace& tr) {
    for (double dist : tr.dist_init) max_sq = std::max(max_sq, dist * dist);
  };
  track(full);
  for (const auto& tr : loo.traces) {
    r.reg_loo = std::max(r.reg_loo, tr.regret());
    track(tr);
  }
  const double L = obj.activation().big_l, R = obj.radius();
  r.sqrt_m = std::sqrt(static_cast<double>(obj.shape().m));
  r.width1_required = 4.0 * L * R * R * max_sq;
  r.width1_ok = r.sqrt_m >= r.width1_required;
  r.width2_required = 6.0 * L * R * R * r.eta * static_cast<double>(r.T) *
                      std::max(r.reg, r.reg_loo);
  r.width2_ok = r.sqrt_m >= r.width2_required;
  r.expansion = loo.expansion;
  return r;
}

namespace {

Dataset draw(const GapScenario& s, std::span<const double> v_star, int count,
             std::uint64_t seed) {
  if (s.kind == ScenarioKind::xor_data) return gen_xor(s.d, count, seed);
  return gen_linsep_with(v_star, s.gamma, count, seed).data;
}

}  // namespace

GenGapReport gen_gap_estimate(const GapScenario& s, int trials, int test_size,
                              std::uint64_t seed, int jobs) {
  if (trials < 5) throw DomainError("gen_gap_estimate: at least 5 trials are required");
  if (test_size < 1) throw DomainError("gen_gap_estimate: test_size must be positive");
  if (s.n < 1) throw DomainError("gen_gap_estimate: n must be positive");
  if (s.T < 0) throw DomainError("gen_gap_estimate: T must be non-negative");
  const NetworkShape shape(s.m, s.d);

  Vec v_star;
  if (s.kind == ScenarioKind::linsep)
    v_star = gen_linsep(s.d, s.gamma, 1, derive_seed(seed, "direction", 0)).v_star;
  const auto heldout = std::make_shared<const Dataset>(
      draw(s, v_star, test_size, derive_seed(seed, "heldout", 0)));
  const double R = heldout->R;

  GenGapReport rep;
  rep.n = s.n;
  rep.T = s.T;
  rep.test_size = test_size;
  const double logT = s.T >= 1 ? std::log(static_cast<double>(s.T)) : 0.0;
  if (s.kind == ScenarioKind::linsep) {
    rep.g = 2.0 * logT / s.gamma;
  } else if (s.ntk_gamma && s.ntk_C) {
    rep.g = (2.0 * *s.ntk_C + logT) / *s.ntk_gamma;
  } else {
    rep.g = std::numeric_limits<double>::quiet_NaN();
  }
  const double ell = s.activation.ell, L = s.activation.big_l;
  rep.bound = 24.0 * ell * ell * R * R * rep.g * rep.g / s.n;
  rep.required_width = 64.0 * 64.0 * L * L * std::pow(R, 4) * std::pow(rep.g, 4);
  rep.width_ok = s.m >= rep.required_width;

  std::vector<double> etas(trials);
  rep.trials = parallel_map(static_cast<std::size_t>(trials), jobs, [&](std::size_t k) {
    const auto train_set = std::make_shared<const Dataset>(
        draw(s, v_star, s.n, derive_seed(seed, "trials", k)));
    const Objective obj(train_set, s.loss, s.activation, shape);
    const Objective test_obj(heldout, s.loss, s.activation, shape);
    const Weights w0 = init_weights(shape, s.init, derive_seed(seed, "init", k));
    const double eta = resolve_step(obj, w0.flat(), s.step);
    etas[k] = eta;
    const TrainTrace tr = train_from(obj, w0.vec(), eta, s.T);
    GenGapTrial g;
    g.trial = static_cast<int>(k);
    g.train_loss = tr.risk.back();
    g.test_loss = test_obj.risk(tr.final_weights);
    g.gap = g.test_loss - g.train_loss;
    g.general_rhs = std::numeric_limits<double>::quiet_NaN();
    if (s.kind == ScenarioKind::linsep && s.init.kind == InitKind::zero &&
        s.activation.odd() && s.T >= 2 && s.m >= 4.0 * logT * logT) {
      const RealizabilityCert cert =
          build_realizability_linear(obj, v_star, s.gamma, 1.0 / static_cast<double>(s.T));
      g.general_rhs = 8.0 * ell * ell * train_set->R * train_set->R / s.n *
                      (eta * static_cast<double>(s.T) * cert.risk + 2.0 * cert.g_eps * cert.g_eps);
    }
    return g;
  });
  rep.eta = etas.front();

  double sum = 0.0, rhs_sum = 0.0;
  for (const auto& t : rep.trials) {
    sum += t.gap;
    rhs_sum += t.general_rhs;
  }
  rep.mean_gap = sum / trials;
  rep.general_rhs_mean = rhs_sum / trials;
  double ss = 0.0;
  for (const auto& t : rep.trials) ss += (t.gap - rep.mean_gap) * (t.gap - rep.mean_gap);
  rep.std_error = std::sqrt(ss / (trials - 1) / trials);
  return rep;
}

}  // namespace sbwc
