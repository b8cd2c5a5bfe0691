#include "sbwc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sbwc/format.hpp"
#include "sbwc/rng.hpp"

namespace sbwc {

StepPolicy StepPolicy::parse(std::string_view text) {
  if (text == "smoothness") return smoothness();
  if (text == "self_bounded") return self_bounded();
  if (text == "ntk") return ntk();
  if (text.starts_with("fixed:")) {
    const double eta = parse_double(text.substr(6));
    if (!(eta > 0.0)) throw ParseError("fixed step size must be positive");
    return fixed(eta);
  }
  throw ParseError("unknown step policy '" + std::string(text) + "'");
}

std::string StepPolicy::name() const {
  switch (kind) {
    case StepPolicyKind::fixed: return "fixed:" + format_double(eta);
    case StepPolicyKind::smoothness: return "smoothness";
    case StepPolicyKind::self_bounded: return "self_bounded";
    case StepPolicyKind::ntk: return "ntk";
  }
  return "?";
}

InitSpec InitSpec::parse(std::string_view text) {
  if (text == "zero") return zero();
  if (text == "gaussian") return gaussian(1.0);
  if (text.starts_with("gaussian:")) {
    const double s = parse_double(text.substr(9));
    if (!(s > 0.0)) throw ParseError("gaussian init scale must be positive");
    return gaussian(s);
  }
  throw ParseError("unknown init '" + std::string(text) + "'");
}

std::string InitSpec::name() const {
  switch (kind) {
    case InitKind::zero: return "zero";
    case InitKind::gaussian:
      return scale == 1.0 ? "gaussian" : "gaussian:" + format_double(scale);
    case InitKind::explicit_weights: return "explicit";
  }
  return "?";
}

double TrainTrace::regret() const {
  if (T == 0) return 0.0;
  double s = 0.0;
  for (long t = 1; t <= T; ++t) s += risk[t];
  return s / static_cast<double>(T);
}

Weights init_weights(NetworkShape shape, const InitSpec& init, std::uint64_t seed) {
  switch (init.kind) {
    case InitKind::zero:
      return Weights(shape);
    case InitKind::gaussian: {
      Rng rng = make_rng(seed, "init");
      std::normal_distribution<double> g(0.0, init.scale);
      Vec w(shape.num_params());
      for (double& v : w) v = g(rng);
      return Weights(shape, std::move(w));
    }
    case InitKind::explicit_weights:
      return Weights(shape, init.weights);
  }
  return Weights(shape);
}

double resolve_step(const Objective& obj, std::span<const double> w0,
                    const StepPolicy& policy) {
  switch (policy.kind) {
    case StepPolicyKind::fixed:
      if (!(policy.eta > 0.0)) throw DomainError("fixed step size must be positive");
      return policy.eta;
    case StepPolicyKind::smoothness:
      return 1.0 / obj.smoothness();
    case StepPolicyKind::ntk:
      return std::min(3.0, 1.0 / obj.smoothness());
    case StepPolicyKind::self_bounded: {
      const LossSpec& loss = obj.loss();
      if (!loss.beta_f || *loss.beta_f > 1.0 || !loss.second_order_self_bounded)
        throw DomainError("self_bounded step policy needs |f'| <= f and f'' <= f; '" +
                          loss.name() + "' does not qualify");
      const double f0 = obj.risk(w0);
      if (!(f0 > 0.0)) throw DomainError("self_bounded step policy: F(w0) = 0");
      const double ell = obj.activation().ell, L = obj.activation().big_l;
      const double R2 = obj.radius() * obj.radius();
      double cap = 1.0 / (ell * ell + L);
      if (L > 0.0 && ell > 0.0) cap = std::min(cap, 1.0 / (std::sqrt(L) * ell));
      return 0.99 * cap / (R2 * f0);
    }
  }
  throw DomainError("unknown step policy");
}

TrainTrace train_from(const Objective& obj, Vec w0, double eta, long T,
                      long record_every, double divergence_factor,
                      const TrainObserver& observer) {
  if (T < 0) throw DomainError("train: T must be non-negative");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw DomainError("train: eta must be positive");
  TrainTrace tr;
  tr.eta = eta;
  tr.T = T;
  tr.w0 = w0;
  tr.risk.reserve(T + 1);
  tr.grad_norm.reserve(T + 1);
  tr.dist_init.reserve(T + 1);
  Vec w = std::move(w0);
  double f0 = 0.0;
  for (long t = 0;; ++t) {
    const ValueGrad vg = obj.value_and_grad(w);
    if (!std::isfinite(vg.risk) || !all_finite(vg.grad))
      throw DivergenceError("train: non-finite loss", t);
    if (t == 0) f0 = vg.risk;
    if (t > 0 && vg.risk > divergence_factor * std::max(f0, 1e-300))
      throw DivergenceError("train: risk exceeded " + format_double(divergence_factor) +
                                " x F(w0)",
                            t);
    tr.risk.push_back(vg.risk);
    tr.grad_norm.push_back(norm(vg.grad));
    tr.dist_init.push_back(distance(w, tr.w0));
    if (observer) observer(t, w, vg.risk, vg.grad);
    if (t == 0 || t == T || (record_every > 0 && t % record_every == 0))
      tr.checkpoints.emplace(t, w);
    if (t == T) break;
    axpy(-eta, vg.grad, w);
  }
  tr.final_weights = std::move(w);
  return tr;
}

TrainTrace train(const Objective& obj, const GDConfig& config,
                 const TrainObserver& observer) {
  if (config.T < 1) throw DomainError("train: T must be at least 1");
  const Weights w0 = init_weights(obj.shape(), config.init, config.seed);
  const double f0 = obj.risk(w0.flat());
  if (!std::isfinite(f0)) throw DivergenceError("train: non-finite initial loss", 0);
  const double eta = resolve_step(obj, w0.flat(), config.step);
  return train_from(obj, w0.vec(), eta, config.T, config.record_every,
                    config.divergence_factor, observer);
}

double verify_descent(const TrainTrace& trace, double eta) {
  double worst = std::numeric_limits<double>::infinity();
  for (long t = 0; t < trace.T; ++t) {
    const double g = trace.grad_norm[t];
    worst = std::min(worst, trace.risk[t] - 0.5 * eta * g * g - trace.risk[t + 1]);
  }
  return worst;
}

}  // namespace sbwc
