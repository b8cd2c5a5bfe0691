#include "sbwc/lab/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "sbwc/format.hpp"
#include "sbwc/parallel.hpp"
#include "sbwc/rng.hpp"

namespace sbwc::lab {

namespace fs = std::filesystem;
using nlohmann::json;

std::ostream& RunContext::os() const { return log ? *log : std::cout; }

namespace {

constexpr int kSchemaVersion = 1;

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void echo_config(const ExperimentConfig& c, const fs::path& dir) {
  write_json(dir / "config.json", to_json(c));
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string num(double v) { return format_double(v); }

void note(const RunContext& ctx, const std::string& line) {
  if (!ctx.quiet) ctx.os() << line << "\n";
}

void add(PropertySummary& s, PropertyReport r) {
  ++s.checked;
  if (r.applicable()) ++s.applicable;
  if (r.failed()) ++s.failures;
  const bool first = s.checked == 1;
  const bool better_witness =
      r.applicable() && (!s.worst.applicable() || r.worst_slack < s.worst.worst_slack);
  if (first || better_witness) s.worst = std::move(r);
  if (s.failures > 0) s.worst.status = PropertyStatus::fails;
}

struct NamedSummaries {
  std::vector<PropertySummary> list;
  PropertySummary& operator[](const std::string& name) {
    for (auto& s : list)
      if (s.worst.name == name) return s;
    list.push_back({});
    list.back().worst.name = name;
    return list.back();
  }
};

PropertyReport descent_report(const TrainTrace& trace) {
  PropertyReport r;
  r.name = "descent";
  r.tolerance = kDescentTolerance;
  r.worst_slack = trace.T > 0 ? verify_descent(trace, trace.eta) : 0.0;
  r.params = {{"eta", trace.eta}, {"T", trace.T}};
  r.status = trace.T == 0 ? PropertyStatus::not_applicable
             : r.worst_slack >= -r.tolerance ? PropertyStatus::holds
                                             : PropertyStatus::fails;
  return r;
}

std::optional<RealizabilityCert> linear_certificate(const ExperimentConfig& c,
                                                    const ScenarioData& s,
                                                    const Objective& obj, long T) {
  if (s.v_star.size() == 0 || !obj.activation().odd()) return std::nullopt;
  if (c.init_spec().kind != InitKind::zero || T < 2) return std::nullopt;
  const double eps = 1.0 / static_cast<double>(T);
  const double logi = std::log(1.0 / eps);
  if (c.m < 4.0 * logi * logi) return std::nullopt;
  return build_realizability_linear(obj, s.v_star, s.gamma, eps);
}

struct NtkContext {
  MarginCert margin;
  InitBound init;
};

std::optional<NtkContext> ntk_context(const ExperimentConfig& c, const ScenarioData& s,
                                      const Vec& w0) {
  if (c.scenario.kind != "xor" || c.loss_spec().kind != LossKind::logistic) return std::nullopt;
  const NetworkShape shape(c.m, c.d);
  const Weights w(shape, w0);
  const auto features = ntk_features(c.activation_spec(), w, *s.data);
  NtkContext ctx{ntk_margin(features, s.data->y, c.margin_iters),
                 init_output_bound(c.activation_spec(), w, *s.data, c.delta)};
  if (!ctx.margin.separated) return std::nullopt;
  return ctx;
}

TrainTrace run_training(const ExperimentConfig& c, const Objective& obj, long record_every) {
  GDConfig cfg;
  cfg.step = c.step_policy();
  cfg.T = c.T;
  cfg.init = c.init_spec();
  cfg.seed = c.seed;
  cfg.record_every = record_every;
  return train(obj, cfg);
}

long checkpoint_stride(const ExperimentConfig& c) {
  return c.record_every > 0 ? c.record_every : std::max<long>(1, c.T / 10);
}

std::vector<PropertySummary> collect(const ExperimentConfig& c, const ScenarioData& s,
                                     const Objective& obj, const TrainTrace& trace,
                                     const PropsOptions& opts, bool pairs) {
  NamedSummaries out;
  std::vector<std::pair<long, const Vec*>> points;
  for (const auto& [t, w] : trace.checkpoints) points.emplace_back(t, &w);

  for (const auto& [t, w] : points) {
    auto r = check_sbwc(obj, *w, 1e-10, 400, opts.kappa_scale);
    r.witness["t"] = t;
    add(out["sbwc"], std::move(r));
    auto g = check_gradient_self_bound(obj, *w);
    g.witness["t"] = t;
    add(out["gradient_self_bound"], std::move(g));
  }
  add(out["descent"], descent_report(trace));

  const auto cert = linear_certificate(c, s, obj, trace.T);
  if (cert) {
    add(out["train_bounds"], check_train_bounds(obj, trace, *cert));
  } else if (const auto ntk = ntk_context(c, s, trace.w0)) {
    add(out["train_bounds"],
        check_train_bounds_ntk(obj, trace, ntk->init.C, ntk->margin.gamma_hat));
  }

  if (pairs && points.size() >= 2) {
    const Vec& last = *points.back().second;
    const auto& loss = obj.loss();
    const bool sb = loss.beta_f && *loss.beta_f <= 1.0 && loss.l_f && *loss.l_f <= 1.0;
    const auto form = sb ? ExpansivenessForm::self_bounded : ExpansivenessForm::general;
    for (std::size_t k = 0; k + 1 < points.size(); ++k) {
      auto r = check_glqc(obj, *points[k].second, last);
      r.witness["t"] = points[k].first;
      add(out["glqc"], std::move(r));
      if (cert) {
        auto e = check_glqc(obj, *points[k].second, cert->w_eps);
        e.witness["t"] = points[k].first;
        e.witness["partner"] = "w_eps";
        add(out["glqc"], std::move(e));
      }
      auto x = check_expansiveness(obj, *points[k].second, *points[k + 1].second, trace.eta,
                                   1000, form);
      x.witness["t"] = points[k].first;
      x.witness["t_prime"] = points[k + 1].first;
      add(out["expansiveness"], std::move(x));
    }
  }
  return out.list;
}

json summaries_json(const std::vector<PropertySummary>& list) {
  json arr = json::array();
  for (const auto& s : list) {
    json j = to_json(s.worst);
    j["checked"] = s.checked;
    j["applicable"] = s.applicable;
    j["failures"] = s.failures;
    arr.push_back(std::move(j));
  }
  return arr;
}

void print_table(const std::vector<PropertySummary>& list, std::ostream& os) {
  os << std::left << std::setw(22) << "property" << std::setw(16) << "status"
     << std::setw(16) << "worst_slack" << "applicable/checked\n";
  for (const auto& s : list) {
    std::ostringstream slack;
    slack << std::setprecision(4) << s.worst.worst_slack;
    os << std::left << std::setw(22) << s.worst.name << std::setw(16)
       << status_name(s.worst.status) << std::setw(16)
       << (s.worst.applicable() ? slack.str() : "-") << s.applicable << "/" << s.checked
       << "\n";
  }
}

bool any_failed(const std::vector<PropertySummary>& list) {
  return std::any_of(list.begin(), list.end(), [](const auto& s) { return s.failures > 0; });
}

std::string csv_trace(const TrainTrace& t) {
  std::ostringstream o;
  o << "t,risk,grad_norm,dist_init\n";
  for (std::size_t i = 0; i < t.risk.size(); ++i)
    o << i << "," << num(t.risk[i]) << "," << num(t.grad_norm[i]) << ","
      << num(t.dist_init[i]) << "\n";
  return o.str();
}

GapScenario gap_scenario(const ExperimentConfig& c, int n, const std::optional<NtkContext>& ntk) {
  GapScenario g;
  g.kind = c.scenario.kind == "xor" ? ScenarioKind::xor_data : ScenarioKind::linsep;
  g.d = c.d;
  g.gamma = c.scenario.gamma;
  g.activation = c.activation_spec();
  g.loss = c.loss_spec();
  g.m = c.m;
  g.n = n;
  g.T = c.T;
  g.step = c.step_policy();
  g.init = c.init_spec();
  if (ntk) {
    g.ntk_gamma = ntk->margin.gamma_hat;
    g.ntk_C = ntk->init.C;
  }
  return g;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

int Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

Table read_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  Table t;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(t.header.size()) + " cells");
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw ParseError(path.string() + ": empty file");
  return t;
}

ScenarioData build_scenario(const ExperimentConfig& c) {
  ScenarioData s;
  const auto seed = derive_seed(c.seed, "data");
  if (c.scenario.kind == "xor") {
    s.data = std::make_shared<const Dataset>(gen_xor(c.d, c.scenario.n, seed));
  } else if (c.scenario.kind == "linsep") {
    auto sample = gen_linsep(c.d, c.scenario.gamma, c.scenario.n, seed);
    s.data = std::make_shared<const Dataset>(std::move(sample.data));
    s.v_star = std::move(sample.v_star);
    s.gamma = c.scenario.gamma;
  } else {
    auto data = load_csv(c.scenario.path);
    if (data.d() != c.d)
      throw ConfigError("shape.d", "csv rows have " + std::to_string(data.d()) +
                                       " features, config says " + std::to_string(c.d));
    s.data = std::make_shared<const Dataset>(std::move(data));
  }
  return s;
}

Objective make_objective(const ExperimentConfig& c, const ScenarioData& s) {
  return Objective(s.data, c.loss_spec(), c.activation_spec(), NetworkShape(c.m, c.d));
}

json to_json(const MarginCert& m) {
  return {{"gamma_hat", m.gamma_hat},
          {"iterations", m.iterations},
          {"separated", m.separated},
          {"status", m.status},
          {"w_star", std::vector<double>(m.w_star.begin(), m.w_star.end())}};
}

json to_json(const RealizabilityCert& r) {
  return {{"construction", r.construction_name()},
          {"eps", r.eps},
          {"g_eps", r.g_eps},
          {"risk", r.risk},
          {"verified", r.verified},
          {"required_width", finite_or_null(r.required_width)},
          {"width_condition_ok", r.width_condition_ok},
          {"w_eps", std::vector<double>(r.w_eps.begin(), r.w_eps.end())}};
}

json to_json(const InitBound& b) {
  return {{"C", b.C}, {"theoretical", b.theoretical}, {"delta", b.delta}};
}

json to_json(const RateFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"points", f.points}};
}

json to_json(const StabilityReport& r) {
  const auto& e = r.expansion;
  return {{"average", r.stability.average},
          {"distances", r.stability.distances},
          {"bound", r.bound},
          {"bound_holds", r.bound_holds()},
          {"reg", r.reg},
          {"reg_loo", r.reg_loo},
          {"eta", r.eta},
          {"T", r.T},
          {"n", r.n},
          {"sqrt_m", r.sqrt_m},
          {"width1_required", r.width1_required},
          {"width1_ok", r.width1_ok},
          {"width2_required", r.width2_required},
          {"width2_ok", r.width2_ok},
          {"expansion",
           {{"steps", e.steps},
            {"applicable", e.applicable},
            {"failures", e.failures},
            {"worst_slack", e.worst_slack},
            {"worst_i", e.worst_i},
            {"worst_t", e.worst_t}}}};
}

json to_json(const GenGapReport& r) {
  json trials = json::array();
  for (const auto& t : r.trials)
    trials.push_back({{"trial", t.trial},
                      {"test_loss", t.test_loss},
                      {"train_loss", t.train_loss},
                      {"gap", t.gap},
                      {"general_rhs", finite_or_null(t.general_rhs)}});
  return {{"n", r.n},
          {"T", r.T},
          {"test_size", r.test_size},
          {"eta", r.eta},
          {"mean_gap", r.mean_gap},
          {"std_error", r.std_error},
          {"g", finite_or_null(r.g)},
          {"bound", finite_or_null(r.bound)},
          {"required_width", finite_or_null(r.required_width)},
          {"width_ok", r.width_ok},
          {"general_rhs_mean", finite_or_null(r.general_rhs_mean)},
          {"trials", trials}};
}

json trace_summary(const TrainTrace& t) {
  return {{"eta", t.eta},
          {"T", t.T},
          {"initial_risk", t.risk.front()},
          {"final_risk", t.risk.back()},
          {"final_grad_norm", t.grad_norm.back()},
          {"max_dist_init", *std::max_element(t.dist_init.begin(), t.dist_init.end())},
          {"regret", t.regret()}};
}

std::vector<PropertySummary> run_properties(const ExperimentConfig& c, const PropsOptions& opts,
                                            int) {
  const auto s = build_scenario(c);
  const auto obj = make_objective(c, s);
  const auto trace = run_training(c, obj, checkpoint_stride(c));
  return collect(c, s, obj, trace, opts, true);
}

int cmd_train(const ExperimentConfig& c, const RunContext& ctx) {
  const auto s = build_scenario(c);
  const auto obj = make_objective(c, s);
  const auto trace = run_training(c, obj, c.record_every);
  const auto reports = collect(c, s, obj, trace, {}, false);
  const double err =
      check_interpolation(obj.activation(), Weights(obj.shape(), trace.final_weights), *s.data);

  fs::create_directories(ctx.out);
  echo_config(c, ctx.out);
  write_text(ctx.out / "trace.csv", csv_trace(trace));
  json summary = {{"schema_version", kSchemaVersion},
                  {"command", "train"},
                  {"dataset", {{"n", s.data->n()}, {"d", s.data->d()}, {"R", s.data->R}}},
                  {"kappa", obj.kappa()},
                  {"train", trace_summary(trace)},
                  {"train_error", err},
                  {"properties", summaries_json(reports)}};
  write_json(ctx.out / "summary.json", summary);
  note(ctx, "eta " + num(trace.eta) + "  F(w_0) " + num(trace.risk.front()) + "  F(w_T) " +
                num(trace.risk.back()) + "  train error " + num(err));
  if (!ctx.quiet) print_table(reports, ctx.os());
  return kExitOk;
}

int cmd_props(const ExperimentConfig& c, const RunContext& ctx, const PropsOptions& opts) {
  const auto reports = run_properties(c, opts, ctx.jobs);
  fs::create_directories(ctx.out);
  echo_config(c, ctx.out);
  write_json(ctx.out / "props.json", {{"schema_version", kSchemaVersion},
                                      {"command", "props"},
                                      {"kappa_scale", opts.kappa_scale},
                                      {"properties", summaries_json(reports)}});
  if (!ctx.quiet) print_table(reports, ctx.os());
  return any_failed(reports) ? kExitPropertyFailure : kExitOk;
}

int cmd_stability(const ExperimentConfig& c, const RunContext& ctx) {
  const auto s = build_scenario(c);
  const auto obj = make_objective(c, s);
  const double params = static_cast<double>(obj.shape().num_params());
  // The per-step expansion check keeps every iterate in memory.
  const bool expansion = (static_cast<double>(c.T) + 1.0) * params <= 5e7;
  const auto full = run_training(c, obj, expansion ? 1 : 0);
  const auto loo = loo_train_all(obj, full, {ctx.jobs, expansion});
  const auto report = stability_report(obj, full, loo);
  note(ctx, "model stability " + num(report.stability.average) + "  bound " +
                num(report.bound) + (report.bound_holds() ? "  (holds)" : "  (VIOLATED)"));

  fs::create_directories(ctx.out);
  echo_config(c, ctx.out);
  json out = {{"schema_version", kSchemaVersion},
              {"command", "stability"},
              {"expansion_checked", expansion},
              {"stability", to_json(report)}};

  if (c.scenario.kind == "csv") {
    out["gen_gap"] = nullptr;
    out["gen_gap_note"] = "generalization gaps need a generated scenario";
    note(ctx, "skipping generalization gaps: csv data has no generator");
  } else {
    const auto ntk = ntk_context(c, s, full.w0);
    std::ostringstream csv;
    csv << "n,trial,gap,bound\n";
    json gaps = json::array();
    for (int n : c.sweep.n) {
      const auto rep = gen_gap_estimate(gap_scenario(c, n, ntk), c.trials, c.test_size,
                                        c.seed, ctx.jobs);
      for (const auto& t : rep.trials)
        csv << n << "," << t.trial << "," << num(t.gap) << "," << num(rep.bound) << "\n";
      note(ctx, "n " + std::to_string(n) + "  mean gap " + num(rep.mean_gap) + " +- " +
                    num(rep.std_error) + "  bound " + num(rep.bound));
      gaps.push_back(to_json(rep));
    }
    out["gen_gap"] = gaps;
    write_text(ctx.out / "gengap.csv", csv.str());
  }
  write_json(ctx.out / "stability.json", out);
  return report.bound_holds() ? kExitOk : kExitPropertyFailure;
}

int cmd_margin(const ExperimentConfig& c, const RunContext& ctx) {
  const auto s = build_scenario(c);
  const auto obj = make_objective(c, s);
  const NetworkShape shape(c.m, c.d);
  const Weights w0 = init_weights(shape, c.init_spec(), c.seed);
  const auto features = ntk_features(c.activation_spec(), w0, *s.data);
  const auto margin = ntk_margin(features, s.data->y, c.margin_iters);
  const auto init = init_output_bound(c.activation_spec(), w0, *s.data, c.delta);
  json out = {{"schema_version", kSchemaVersion},
              {"command", "margin"},
              {"margin", to_json(margin)},
              {"init_bound", to_json(init)},
              {"realizability", nullptr}};
  note(ctx, "gamma_hat " + num(margin.gamma_hat) + "  (" + margin.status + ")  C " +
                num(init.C));
  if (margin.separated && c.loss_spec().kind == LossKind::logistic) {
    const auto cert = build_realizability_ntk(obj, w0.flat(), margin, init.C, c.margin_eps);
    out["realizability"] = to_json(cert);
    note(ctx, "w_eps risk " + num(cert.risk) + " at eps " + num(cert.eps) +
                  (cert.width_condition_ok ? "" : "  (width condition not met: m >= " +
                                                      num(cert.required_width) + ")"));
  }
  fs::create_directories(ctx.out);
  echo_config(c, ctx.out);
  write_json(ctx.out / "margin.json", out);
  return kExitOk;
}

int cmd_sweep(const ExperimentConfig& c, const RunContext& ctx) {
  struct Point {
    int n, m;
    double gamma;
    std::uint64_t seed;
  };
  std::vector<Point> grid;
  const bool linsep = c.scenario.kind == "linsep";
  const bool csv = c.scenario.kind == "csv";
  const std::vector<int> ns = csv ? std::vector<int>{0} : c.sweep.n;
  const std::vector<double> gammas = linsep ? c.sweep.gamma : std::vector<double>{c.scenario.gamma};
  for (int n : ns)
    for (int m : c.sweep.m)
      for (double g : gammas)
        for (auto seed : c.sweep.seeds) grid.push_back({n, m, g, seed});
  std::vector<long> Ts = c.sweep.T;
  std::sort(Ts.begin(), Ts.end());
  Ts.erase(std::unique(Ts.begin(), Ts.end()), Ts.end());
  const long T_max = Ts.back();

  struct Row {
    long T;
    double eta, risk, regret, grad_norm, err;
  };
  // GD is deterministic, so one run to the largest horizon serves every T.
  auto run = [&](std::size_t k) {
    const Point& p = grid[k];
    ExperimentConfig pc = c;
    if (!csv) pc.scenario.n = p.n;
    pc.m = p.m;
    pc.scenario.gamma = p.gamma;
    pc.seed = p.seed;
    pc.T = std::max<long>(T_max, 1);
    const auto s = build_scenario(pc);
    const auto obj = make_objective(pc, s);
    std::map<long, double> errors;
    const std::set<long> wanted(Ts.begin(), Ts.end());
    GDConfig cfg{pc.step_policy(), pc.T, pc.init_spec(), pc.seed, 0, 1e3};
    const auto trace = train(obj, cfg, [&](long t, std::span<const double> w, double,
                                           std::span<const double>) {
      if (wanted.count(t))
        errors[t] = check_interpolation(obj.activation(),
                                        Weights(obj.shape(), Vec(w.begin(), w.end())),
                                        *s.data);
    });
    std::vector<Row> rows;
    double sum = 0.0;
    long next = 0;
    for (long T : Ts) {
      for (; next < T; ++next) sum += trace.risk[next + 1];
      rows.push_back({T, trace.eta, trace.risk[T], T > 0 ? sum / T : 0.0, trace.grad_norm[T],
                      errors.at(T)});
    }
    return std::make_pair(s.data->n(), rows);
  };
  const auto results = parallel_map(grid.size(), ctx.jobs, run);

  std::ostringstream out;
  out << "T,n,m,gamma,seed,eta,final_risk,regret,grad_norm,train_error\n";
  for (std::size_t k = 0; k < grid.size(); ++k)
    for (const auto& r : results[k].second)
      out << r.T << "," << results[k].first << "," << grid[k].m << ","
          << (linsep ? num(grid[k].gamma) : std::string()) << "," << grid[k].seed << ","
          << num(r.eta) << "," << num(r.risk) << "," << num(r.regret) << ","
          << num(r.grad_norm) << "," << num(r.err) << "\n";
  fs::create_directories(ctx.out);
  echo_config(c, ctx.out);
  write_text(ctx.out / "sweep.csv", out.str());
  note(ctx, std::to_string(grid.size()) + " runs x " + std::to_string(Ts.size()) +
                " horizons -> " + (ctx.out / "sweep.csv").string());
  return kExitOk;
}

int cmd_fit(const FitOptions& opts, const RunContext& ctx) {
  const Table t = read_table(opts.input);
  const int xi = t.column(opts.x), yi = t.column(opts.y);
  if (xi < 0) throw ConfigError("--x", "no column '" + opts.x + "'");
  if (yi < 0) throw ConfigError("--y", "no column '" + opts.y + "'");
  const int gi = opts.group.empty() ? -1 : t.column(opts.group);
  if (!opts.group.empty() && gi < 0) throw ConfigError("--group", "no column '" + opts.group + "'");

  std::map<std::string, std::vector<std::pair<double, double>>> series;
  for (const auto& row : t.rows)
    series[gi < 0 ? std::string() : row[gi]].emplace_back(parse_double(row[xi]),
                                                          parse_double(row[yi]));
  json fits = json::array();
  for (auto& [group, pts] : series) {
    if (opts.mean) {
      std::map<double, std::pair<double, int>> acc;
      for (const auto& [x, y] : pts) {
        acc[x].first += y;
        acc[x].second += 1;
      }
      pts.clear();
      for (const auto& [x, a] : acc) pts.emplace_back(x, a.first / a.second);
    }
    const auto fit = fit_rate(pts);
    json j = to_json(fit);
    if (gi >= 0) j["group"] = group;
    fits.push_back(j);
    note(ctx, (gi >= 0 ? opts.group + "=" + group + "  " : std::string()) + "slope " +
                  num(fit.slope) + "  intercept " + num(fit.intercept) + "  r2 " + num(fit.r2));
  }
  fs::create_directories(ctx.out);
  write_json(ctx.out / "fit.json", {{"schema_version", kSchemaVersion},
                                    {"input", opts.input.string()},
                                    {"x", opts.x},
                                    {"y", opts.y},
                                    {"fits", fits}});
  return kExitOk;
}

namespace {

const char* kRenderScript = R"(#!/usr/bin/env python3
# Renders every tidy CSV (x, y, series) in this directory to a PNG.
import csv
import glob
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
for path in sorted(glob.glob(os.path.join(here, "*.csv"))):
    series = {}
    with open(path) as f:
        for row in csv.DictReader(f):
            series.setdefault(row["series"], []).append((float(row["x"]), float(row["y"])))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name, pts in sorted(series.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker=".", label=name)
    if all(p[0] > 0 and p[1] > 0 for pts in series.values() for p in pts):
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_title(os.path.basename(path)[:-4])
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path[:-4] + ".png", dpi=120)
    plt.close(fig)
    print("wrote", path[:-4] + ".png", file=sys.stderr)
)";

struct Tidy {
  std::ostringstream body;
  int rows = 0;
  Tidy() { body << "x,y,series\n"; }
  void add(const std::string& x, double y, const std::string& series) {
    body << x << "," << num(y) << "," << series << "\n";
    ++rows;
  }
};

}  // namespace

int cmd_plots(const fs::path& results, const RunContext& ctx) {
  std::map<std::string, Tidy> files;
  if (fs::exists(results / "trace.csv")) {
    const Table t = read_table(results / "trace.csv");
    for (const auto& name : {"risk", "grad_norm", "dist_init"}) {
      const int c = t.column(name);
      if (c < 0) continue;
      auto& f = files["trace_" + std::string(name)];
      for (const auto& row : t.rows) f.add(row[0], parse_double(row[c]), name);
    }
  }
  if (fs::exists(results / "sweep.csv")) {
    const Table t = read_table(results / "sweep.csv");
    // Mean over seeds for each (n, m, gamma) series.
    std::map<std::pair<std::string, long>, std::pair<double, int>> acc;
    const int T = t.column("T"), n = t.column("n"), m = t.column("m"), g = t.column("gamma"),
              r = t.column("final_risk");
    for (const auto& row : t.rows) {
      const std::string series = "n=" + row[n] + " m=" + row[m] +
                                 (row[g].empty() ? "" : " gamma=" + row[g]);
      auto& a = acc[{series, std::stol(row[T])}];
      a.first += parse_double(row[r]);
      a.second += 1;
    }
    auto& f = files["sweep_risk_vs_T"];
    for (const auto& [key, a] : acc) f.add(std::to_string(key.second), a.first / a.second, key.first);
  }
  if (fs::exists(results / "gengap.csv")) {
    const Table t = read_table(results / "gengap.csv");
    std::map<long, std::pair<double, int>> acc;
    std::map<long, double> bound;
    for (const auto& row : t.rows) {
      const long n = std::stol(row[0]);
      acc[n].first += parse_double(row[2]);
      acc[n].second += 1;
      bound[n] = parse_double(row[3]);
    }
    auto& f = files["gengap_vs_n"];
    for (const auto& [n, a] : acc) {
      f.add(std::to_string(n), a.first / a.second, "mean_gap");
      if (std::isfinite(bound[n])) f.add(std::to_string(n), bound[n], "bound");
    }
  }
  std::erase_if(files, [](const auto& kv) { return kv.second.rows == 0; });
  if (files.empty()) {
    ctx.os() << "nothing to plot\n";
    return kExitOk;
  }
  const fs::path dir = ctx.out / "plots";
  for (const auto& [name, tidy] : files) write_text(dir / (name + ".csv"), tidy.body.str());
  write_text(dir / "render.py", kRenderScript);
  fs::permissions(dir / "render.py", fs::perms::owner_exec, fs::perm_options::add);
  note(ctx, std::to_string(files.size()) + " plot tables in " + dir.string() +
                "; render with python3 " + (dir / "render.py").string());
  return kExitOk;
}

int cmd_selftest(const RunContext& ctx) {
  int failures = 0;
  auto line = [&](bool ok, const std::string& what) {
    if (!ok) ++failures;
    ctx.os() << (ok ? "PASS " : "FAIL ") << what << "\n";
  };
  ExperimentConfig c;
  c.scenario.n = 16;
  c.m = 64;
  c.T = 60;
  c.record_every = 20;
  c.seed = 11;
  line(parse_config(serialize_config(c)) == c, "config round trip");

  const auto clean = run_properties(c, {});
  line(!any_failed(clean), "property suite holds on a small XOR run");
  const auto faulty = run_properties(c, {-1.0});
  line(any_failed(faulty), "negative control: sbwc with kappa sign flipped fails");

  std::vector<std::pair<double, double>> pts;
  for (double x : {1.0, 2.0, 4.0, 8.0, 16.0}) pts.emplace_back(x, 3.0 / x);
  const auto fit = fit_rate(pts);
  line(std::abs(fit.slope + 1.0) < 1e-12 && std::abs(fit.r2 - 1.0) < 1e-12,
       "rate fit recovers slope -1");

  bool rejected = false;
  try {
    parse_config("[shape]\nm = 3\n");
  } catch (const ConfigError& e) {
    rejected = e.field() == "shape.m";
  }
  line(rejected, "odd width rejected with field path");
  return failures == 0 ? kExitOk : kExitPropertyFailure;
}

}  // namespace sbwc::lab
