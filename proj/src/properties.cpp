#include "sbwc/properties.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sbwc {

using nlohmann::json;

std::string status_name(PropertyStatus s) {
  switch (s) {
    case PropertyStatus::holds: return "holds";
    case PropertyStatus::fails: return "fails";
    case PropertyStatus::not_applicable: return "not_applicable";
  }
  return "unknown";
}

json to_json(const PropertyReport& r) {
  json j;
  j["name"] = r.name;
  j["status"] = status_name(r.status);
  j["holds"] = r.holds();
  j["worst_slack"] = r.worst_slack;
  j["tolerance"] = r.tolerance;
  j["witness"] = r.witness;
  j["params"] = r.params;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

namespace {

PropertyReport not_applicable(std::string name, std::string why, json params = json::object()) {
  PropertyReport r;
  r.name = std::move(name);
  r.status = PropertyStatus::not_applicable;
  r.note = std::move(why);
  r.params = std::move(params);
  return r;
}

void settle(PropertyReport& r) {
  r.status = r.worst_slack >= -r.tolerance ? PropertyStatus::holds : PropertyStatus::fails;
}

RowMatrix preactivations(const Objective& obj, std::span<const double> w) {
  const Weights weights(obj.shape(), Vec(w.begin(), w.end()));
  return obj.data().X * weights.matrix().transpose();
}

}  // namespace

SegmentEvaluator::SegmentEvaluator(const Objective& obj, std::span<const double> w1,
                                   std::span<const double> w2)
    : obj_(obj), z1_(preactivations(obj, w1)) {
  dz_ = preactivations(obj, w2) - z1_;
}

SegmentEvaluator::Point SegmentEvaluator::at(double alpha) const {
  const int n = obj_.n();
  const int m = obj_.shape().m;
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
  const auto& y = obj_.data().y;
  const auto excluded = obj_.excluded_index();
  Point p;
  for (int i = 0; i < n; ++i) {
    if (excluded && *excluded == i) continue;
    double plus = 0.0, minus = 0.0;
    for (int j = 0; j < m / 2; ++j)
      plus += act_eval_unchecked(obj_.activation().kind, z1_(i, j) + alpha * dz_(i, j)).sigma;
    for (int j = m / 2; j < m; ++j)
      minus += act_eval_unchecked(obj_.activation().kind, z1_(i, j) + alpha * dz_(i, j)).sigma;
    const double phi = (plus - minus) * inv_sqrt_m;
    const LossValue lv = loss_eval_unchecked(obj_.loss(), y[i] * phi);
    p.risk += lv.f;
    p.fprime += std::abs(lv.d1);
    p.fdoubleprime += lv.d2;
  }
  p.risk /= n;
  p.fprime /= n;
  p.fdoubleprime /= n;
  return p;
}

SegmentMax segment_max(const std::function<double(double)>& fn, int grid_size) {
  if (grid_size < 1) throw DomainError("segment_max: grid_size must be positive");
  SegmentMax best{-std::numeric_limits<double>::infinity(), 0.0};
  int arg = 0;
  for (int k = 0; k <= grid_size; ++k) {
    const double a = static_cast<double>(k) / grid_size;
    const double v = fn(a);
    if (v > best.value) {
      best = {v, a};
      arg = k;
    }
  }
  double lo = static_cast<double>(std::max(arg - 1, 0)) / grid_size;
  double hi = static_cast<double>(std::min(arg + 1, grid_size)) / grid_size;
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - r * (hi - lo), d = lo + r * (hi - lo);
  double fc = fn(c), fd = fn(d);
  for (int it = 0; it < 60 && hi - lo > 1e-14; ++it) {
    if (fc >= fd) {
      hi = d; d = c; fd = fc;
      c = hi - r * (hi - lo);
      fc = fn(c);
    } else {
      lo = c; c = d; fc = fd;
      d = lo + r * (hi - lo);
      fd = fn(d);
    }
  }
  if (fc > best.value) best = {fc, c};
  if (fd > best.value) best = {fd, d};
  return best;
}

PropertyReport check_sbwc(const Objective& obj, std::span<const double> w, double tol,
                          std::size_t dense_limit, double kappa_scale) {
  const EigenEstimate est = obj.min_eig(w, 0.0, dense_limit);
  const double risk = obj.risk(w);
  const double kappa = kappa_scale * obj.kappa();
  PropertyReport r;
  r.name = "sbwc";
  r.worst_slack = est.lambda + kappa * risk;
  r.tolerance = tol;
  r.params = {{"kappa", kappa}, {"risk", risk}, {"lambda_min", est.lambda},
              {"residual", est.residual}, {"matvecs", est.matvecs}};
  r.witness = {{"lambda_min", est.lambda}, {"risk", risk}};
  settle(r);
  return r;
}

PropertyReport check_gradient_self_bound(const Objective& obj, std::span<const double> w,
                                         double tol) {
  const auto& loss = obj.loss();
  if (!loss.beta_f || *loss.beta_f > 1.0)
    return not_applicable("gradient_self_bound", "loss is not self-bounded with beta_f <= 1");
  const double ell_r = obj.activation().ell * obj.radius();
  const Vec losses = obj.sample_losses(w);
  PropertyReport r;
  r.name = "gradient_self_bound";
  r.worst_slack = std::numeric_limits<double>::infinity();
  r.tolerance = tol;
  for (int i = 0; i < obj.n(); ++i) {
    if (obj.excluded_index() && *obj.excluded_index() == i) continue;
    const double g = norm(obj.sample_grad(w, i));
    const double slack = ell_r * losses[i] - g;
    if (slack < r.worst_slack) {
      r.worst_slack = slack;
      r.witness = {{"sample", i}, {"grad_norm", g}, {"loss", losses[i]}};
    }
  }
  if (!std::isfinite(r.worst_slack)) r.worst_slack = 0.0;
  r.params = {{"ell_R", ell_r}};
  settle(r);
  return r;
}

PropertyReport check_glqc(const Objective& obj, std::span<const double> w1,
                          std::span<const double> w2, const GlqcOptions& opts) {
  const double D = distance(w1, w2);
  const double kappa = obj.kappa();
  const double L = obj.activation().big_l, R = obj.radius();
  const double sqrt_m = std::sqrt(static_cast<double>(obj.shape().m));
  json params = {{"kappa", kappa}, {"D", D}, {"grid_size", opts.grid_size},
                 {"fine_grid_size", opts.fine_grid_size}};
  double tau;
  if (opts.lambda) {
    const double lambda = *opts.lambda;
    if (!(lambda > 1.0)) throw DomainError("check_glqc: lambda must exceed 1");
    params["lambda"] = lambda;
    if (sqrt_m < lambda * L * R * R * D * D / 2.0)
      return not_applicable("glqc", "width below lambda L R^2 D^2 / 2", params);
    tau = lambda / (lambda - 1.0);
  } else {
    if (kappa * D * D / 2.0 >= 1.0)
      return not_applicable("glqc", "distance exceeds sqrt(2/kappa)", params);
    tau = 1.0 / (1.0 - kappa * D * D / 2.0);
  }
  params["tau"] = tau;

  const SegmentEvaluator seg(obj, w1, w2);
  const auto fn = [&](double a) { return seg.risk(a); };
  const double f1 = fn(0.0), f2 = fn(1.0);
  const SegmentMax coarse = segment_max(fn, opts.grid_size);
  const SegmentMax fine = segment_max(fn, opts.fine_grid_size);
  const SegmentMax best = fine.value >= coarse.value ? fine : coarse;
  const double residual =
      std::abs(fine.value - coarse.value) / std::max(std::abs(best.value), 1e-300);
  const double rhs = tau * std::max(f1, f2);

  PropertyReport r;
  r.name = "glqc";
  r.params = params;
  r.params["refinement_residual"] = residual;
  r.worst_slack = rhs - best.value;
  r.tolerance = slack_tolerance(rhs);
  r.witness = {{"alpha", best.alpha}, {"segment_max", best.value},
               {"endpoint_risks", {f1, f2}}};
  settle(r);
  if (r.holds() && residual >= opts.max_refinement_residual) {
    r.status = PropertyStatus::fails;
    r.note = "grid refinement did not settle";
  }
  return r;
}

PropertyReport check_expansiveness(const Objective& obj, std::span<const double> w,
                                   std::span<const double> w_prime, double eta,
                                   int grid_size, ExpansivenessForm form) {
  const double ell = obj.activation().ell, R = obj.radius();
  const double kappa = obj.kappa();
  const bool sb = form == ExpansivenessForm::self_bounded;
  const std::string name = sb ? "expansiveness" : "expansiveness_general";
  json params = {{"eta", eta}, {"kappa", kappa}, {"grid_size", grid_size},
                 {"form", sb ? "self_bounded" : "general"}};
  if (!(eta > 0.0)) return not_applicable(name, "step size must be positive", params);
  if (sb) {
    const auto& loss = obj.loss();
    if (eta > 1.0 / (ell * ell * R * R))
      return not_applicable(name, "step size above 1/(ell^2 R^2)", params);
    if (!loss.beta_f || *loss.beta_f > 1.0 || !loss.l_f || *loss.l_f > 1.0)
      return not_applicable(name, "loss lacks |f'| <= f or f'' <= 1", params);
  }

  Vec a(w.begin(), w.end()), b(w_prime.begin(), w_prime.end());
  axpy(-eta, obj.risk_grad(w), a);
  axpy(-eta, obj.risk_grad(w_prime), b);
  const double lhs = distance(a, b);
  const double dist = distance(w, w_prime);

  const SegmentEvaluator seg(obj, w_prime, w);
  double coefficient;
  SegmentMax best;
  if (sb) {
    best = segment_max([&](double t) { return seg.risk(t); }, grid_size);
    coefficient = 1.0 + eta * kappa * best.value;
  } else {
    best = segment_max(
        [&](double t) {
          const auto p = seg.at(t);
          return eta * kappa * p.fprime + std::max(1.0, eta * ell * ell * R * R * p.fdoubleprime);
        },
        grid_size);
    coefficient = best.value;
  }
  const double rhs = coefficient * dist;
  PropertyReport r;
  r.name = name;
  r.params = params;
  r.params["coefficient"] = coefficient;
  r.worst_slack = rhs - lhs;
  r.tolerance = slack_tolerance(rhs);
  r.witness = {{"lhs", lhs}, {"distance", dist}, {"alpha", best.alpha}};
  settle(r);
  return r;
}

namespace {

struct SubCheck {
  const char* name;
  double bound;
  double measured;
};

PropertyReport combine(std::string name, const std::vector<SubCheck>& checks, json params) {
  PropertyReport r;
  r.name = std::move(name);
  r.params = std::move(params);
  double worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& c : checks) {
    const double slack = c.bound - c.measured;
    const double tol = slack_tolerance(c.bound);
    r.witness[c.name] = {{"bound", c.bound}, {"measured", c.measured}, {"slack", slack}};
    // The sub-check closest to violation decides the verdict.
    if (slack + tol < worst_margin) {
      worst_margin = slack + tol;
      r.worst_slack = slack;
      r.tolerance = tol;
    }
  }
  settle(r);
  return r;
}

std::optional<double> smoothness_or_none(const Objective& obj) {
  try {
    return obj.smoothness();
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

}  // namespace

PropertyReport check_train_bounds(const Objective& obj, const TrainTrace& trace,
                                  const RealizabilityCert& cert) {
  if (trace.risk.size() != static_cast<std::size_t>(trace.T) + 1 ||
      trace.dist_init.size() != trace.risk.size())
    throw DomainError("check_train_bounds: trace is missing per-iteration fields");
  const std::string name = "train_bounds";
  const double L = obj.activation().big_l, R = obj.radius();
  const double g = cert.g_eps, eta = trace.eta;
  const long T = trace.T;
  const double m = obj.shape().m;
  const double required_width = 18.0 * 18.0 * L * L * std::pow(R, 4) * std::pow(g, 4);
  json params = {{"g", g}, {"eps", cert.eps}, {"eta", eta}, {"T", T},
                 {"required_width", required_width}, {"m", m}};
  if (T < 1) return not_applicable(name, "horizon T must be at least 1", params);
  if (m < required_width) return not_applicable(name, "width below 18^2 L^2 R^4 g^4", params);
  const auto lf = smoothness_or_none(obj);
  if (!lf || eta > 1.0 / *lf) return not_applicable(name, "step size above 1/L_F", params);
  if (g * g < std::max(eta * T * cert.risk, eta * trace.risk.front()))
    return not_applicable(name, "g^2 below max{eta T F(w_eps), eta F(w0)}", params);

  const double tail = 5.0 * g * g / (2.0 * eta * static_cast<double>(T));
  const double max_dist = *std::max_element(trace.dist_init.begin(), trace.dist_init.end());
  return combine(name,
                 {{"regret", 2.0 * cert.risk + tail, trace.regret()},
                  {"last_iterate", 2.0 * cert.eps + tail, trace.risk.back()},
                  {"iterate_distance", 4.0 * g, max_dist}},
                 params);
}

PropertyReport check_train_bounds_ntk(const Objective& obj, const TrainTrace& trace,
                                      double C, double gamma) {
  if (trace.risk.size() != static_cast<std::size_t>(trace.T) + 1)
    throw DomainError("check_train_bounds_ntk: trace is missing per-iteration fields");
  const std::string name = "train_bounds_ntk";
  const long T = trace.T;
  const double eta = trace.eta;
  const double L = obj.activation().big_l, R = obj.radius();
  json params = {{"C", C}, {"gamma", gamma}, {"eta", eta}, {"T", T}};
  if (T < 1) return not_applicable(name, "horizon T must be at least 1", params);
  if (!(gamma > 0.0)) return not_applicable(name, "margin is not positive", params);
  const double g = (2.0 * C + std::log(static_cast<double>(T))) / gamma;
  const double required_width = 64.0 * 64.0 * L * L * std::pow(R, 4) * std::pow(g, 4);
  params["g"] = g;
  params["required_width"] = required_width;
  if (obj.shape().m < required_width)
    return not_applicable(name, "width below 64^2 L^2 R^4 g^4", params);
  const auto lf = smoothness_or_none(obj);
  if (!lf || eta > std::min(3.0, 1.0 / *lf))
    return not_applicable(name, "step size above min{3, 1/L_F}", params);
  return combine(name,
                 {{"last_iterate", 5.0 * g * g / (eta * static_cast<double>(T)),
                   trace.risk.back()}},
                 params);
}

double check_interpolation(const ActivationSpec& spec, const Weights& w,
                           const Dataset& data) {
  if (data.n() == 0) return 0.0;
  const Eigen::VectorXd phi = forward_batch(spec, w, data.X);
  int wrong = 0;
  for (int i = 0; i < data.n(); ++i)
    if (data.y[i] * phi[i] <= 0.0) ++wrong;
  return static_cast<double>(wrong) / data.n();
}

}  // namespace sbwc
