#include "sbwc/lab/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "sbwc/format.hpp"

namespace sbwc::lab {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class Int>
Int parse_int(const std::string& field, std::string_view text) {
  Int v{};
  const auto t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError(field, "expected an integer, got '" + std::string(text) + "'");
  return v;
}

double parse_real(const std::string& field, std::string_view text) {
  try {
    return parse_double(text);
  } catch (const ParseError&) {
    throw ConfigError(field, "expected a number, got '" + std::string(text) + "'");
  }
}

template <class T, class F>
std::vector<T> parse_list(const std::string& field, std::string_view text, F&& one) {
  std::vector<T> out;
  std::string_view rest = text;
  while (true) {
    const auto comma = rest.find(',');
    const auto item = trim(rest.substr(0, comma));
    if (item.empty()) throw ConfigError(field, "empty list entry");
    out.push_back(one(field, item));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F&& fmt) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += fmt(v[i]);
  }
  return s;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, std::string_view)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](auto& c, auto& f, auto v) { c.seed = parse_int<std::uint64_t>(f, v); }},
      {"out", [](auto& c, auto&, auto v) { c.out = std::string(v); }},
      {"delta", [](auto& c, auto& f, auto v) { c.delta = parse_real(f, v); }},
      {"scenario.kind", [](auto& c, auto&, auto v) { c.scenario.kind = std::string(v); }},
      {"scenario.n", [](auto& c, auto& f, auto v) { c.scenario.n = parse_int<int>(f, v); }},
      {"scenario.gamma", [](auto& c, auto& f, auto v) { c.scenario.gamma = parse_real(f, v); }},
      {"scenario.path", [](auto& c, auto&, auto v) { c.scenario.path = std::string(v); }},
      {"shape.m", [](auto& c, auto& f, auto v) { c.m = parse_int<int>(f, v); }},
      {"shape.d", [](auto& c, auto& f, auto v) { c.d = parse_int<int>(f, v); }},
      {"model.activation", [](auto& c, auto&, auto v) { c.activation = std::string(v); }},
      {"model.loss", [](auto& c, auto&, auto v) { c.loss = std::string(v); }},
      {"train.step", [](auto& c, auto&, auto v) { c.step = std::string(v); }},
      {"train.T", [](auto& c, auto& f, auto v) { c.T = parse_int<long>(f, v); }},
      {"train.init", [](auto& c, auto&, auto v) { c.init = std::string(v); }},
      {"train.record_every",
       [](auto& c, auto& f, auto v) { c.record_every = parse_int<long>(f, v); }},
      {"sweep.T",
       [](auto& c, auto& f, auto v) { c.sweep.T = parse_list<long>(f, v, parse_int<long>); }},
      {"sweep.n",
       [](auto& c, auto& f, auto v) { c.sweep.n = parse_list<int>(f, v, parse_int<int>); }},
      {"sweep.m",
       [](auto& c, auto& f, auto v) { c.sweep.m = parse_list<int>(f, v, parse_int<int>); }},
      {"sweep.gamma",
       [](auto& c, auto& f, auto v) { c.sweep.gamma = parse_list<double>(f, v, parse_real); }},
      {"sweep.seeds",
       [](auto& c, auto& f, auto v) {
         c.sweep.seeds = parse_list<std::uint64_t>(f, v, parse_int<std::uint64_t>);
       }},
      {"stability.trials",
       [](auto& c, auto& f, auto v) { c.trials = parse_int<int>(f, v); }},
      {"stability.test_size",
       [](auto& c, auto& f, auto v) { c.test_size = parse_int<int>(f, v); }},
      {"margin.max_iters",
       [](auto& c, auto& f, auto v) { c.margin_iters = parse_int<long>(f, v); }},
      {"margin.eps", [](auto& c, auto& f, auto v) { c.margin_eps = parse_real(f, v); }},
  };
  return table;
}

}  // namespace

void validate(const ExperimentConfig& c) {
  const auto& s = c.scenario;
  if (s.kind != "xor" && s.kind != "linsep" && s.kind != "csv")
    throw ConfigError("scenario.kind", "expected xor, linsep or csv, got '" + s.kind + "'");
  if (s.kind != "csv" && s.n < 1) throw ConfigError("scenario.n", "must be at least 1");
  if (s.kind == "linsep" && !(s.gamma > 0.0 && s.gamma < 1.0))
    throw ConfigError("scenario.gamma", "must lie in (0, 1)");
  if (s.kind == "csv" && s.path.empty()) throw ConfigError("scenario.path", "required for csv");
  if (c.m < 1 || c.m % 2 != 0) throw ConfigError("shape.m", "must be a positive even integer");
  if (c.d < 1) throw ConfigError("shape.d", "must be a positive integer");
  if (s.kind == "xor" && c.d < 3) throw ConfigError("shape.d", "noisy XOR needs d >= 3");
  if (s.kind == "linsep" && c.d < 2) throw ConfigError("shape.d", "linsep needs d >= 2");
  auto check_parse = [](const char* field, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      throw ConfigError(field, e.what());
    }
  };
  check_parse("model.activation", [&] { c.activation_spec(); });
  check_parse("model.loss", [&] { c.loss_spec(); });
  check_parse("train.step", [&] { c.step_policy(); });
  check_parse("train.init", [&] { c.init_spec(); });
  if (c.T < 1) throw ConfigError("train.T", "must be at least 1");
  if (c.record_every < 0) throw ConfigError("train.record_every", "must be non-negative");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("delta", "must lie in (0, 1)");
  const auto& w = c.sweep;
  if (w.T.empty()) throw ConfigError("sweep.T", "must not be empty");
  if (w.n.empty()) throw ConfigError("sweep.n", "must not be empty");
  if (w.m.empty()) throw ConfigError("sweep.m", "must not be empty");
  if (w.gamma.empty()) throw ConfigError("sweep.gamma", "must not be empty");
  if (w.seeds.empty()) throw ConfigError("sweep.seeds", "must not be empty");
  for (long t : w.T)
    if (t < 0) throw ConfigError("sweep.T", "entries must be non-negative");
  for (int n : w.n)
    if (n < 1) throw ConfigError("sweep.n", "entries must be positive");
  for (int m : w.m)
    if (m < 1 || m % 2 != 0) throw ConfigError("sweep.m", "entries must be positive even integers");
  for (double g : w.gamma)
    if (!(g > 0.0 && g < 1.0)) throw ConfigError("sweep.gamma", "entries must lie in (0, 1)");
  if (c.trials < 5) throw ConfigError("stability.trials", "must be at least 5");
  if (c.test_size < 1) throw ConfigError("stability.test_size", "must be positive");
  if (c.margin_iters < 1) throw ConfigError("margin.max_iters", "must be positive");
  if (!(c.margin_eps > 0.0 && c.margin_eps <= 1.0))
    throw ConfigError("margin.eps", "must lie in (0, 1]");
}

ExperimentConfig parse_config(std::string_view text, std::string_view source) {
  ExperimentConfig c;
  std::string table;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  const auto& table_setters = setters();
  auto fail = [&](const std::string& what) {
    return ParseError(std::string(source) + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw fail("unterminated table header");
      table = std::string(trim(line.substr(1, line.size() - 2)));
      if (table.empty()) throw fail("empty table name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw fail("expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const std::string field = table.empty() ? key : table + "." + key;
    const auto it = table_setters.find(field);
    if (it == table_setters.end()) throw fail("unknown key '" + field + "'");
    it->second(c, field, value);
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string serialize_config(const ExperimentConfig& c) {
  auto num = [](double v) { return format_double(v); };
  auto integer = [](auto v) { return std::to_string(v); };
  std::ostringstream o;
  o << "seed = " << c.seed << "\n"
    << "out = " << c.out << "\n"
    << "delta = " << num(c.delta) << "\n\n"
    << "[scenario]\n"
    << "kind = " << c.scenario.kind << "\n"
    << "n = " << c.scenario.n << "\n"
    << "gamma = " << num(c.scenario.gamma) << "\n";
  if (!c.scenario.path.empty()) o << "path = " << c.scenario.path << "\n";
  o << "\n[shape]\nm = " << c.m << "\nd = " << c.d << "\n\n"
    << "[model]\nactivation = " << c.activation << "\nloss = " << c.loss << "\n\n"
    << "[train]\nstep = " << c.step << "\nT = " << c.T << "\ninit = " << c.init
    << "\nrecord_every = " << c.record_every << "\n\n"
    << "[sweep]\n"
    << "T = " << join(c.sweep.T, integer) << "\n"
    << "n = " << join(c.sweep.n, integer) << "\n"
    << "m = " << join(c.sweep.m, integer) << "\n"
    << "gamma = " << join(c.sweep.gamma, num) << "\n"
    << "seeds = " << join(c.sweep.seeds, integer) << "\n\n"
    << "[stability]\ntrials = " << c.trials << "\ntest_size = " << c.test_size << "\n\n"
    << "[margin]\nmax_iters = " << c.margin_iters << "\neps = " << num(c.margin_eps) << "\n";
  return o.str();
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {
      {"seed", c.seed},
      {"out", c.out},
      {"delta", c.delta},
      {"scenario",
       {{"kind", c.scenario.kind}, {"n", c.scenario.n}, {"gamma", c.scenario.gamma},
        {"path", c.scenario.path}}},
      {"shape", {{"m", c.m}, {"d", c.d}}},
      {"model", {{"activation", c.activation}, {"loss", c.loss}}},
      {"train",
       {{"step", c.step}, {"T", c.T}, {"init", c.init}, {"record_every", c.record_every}}},
      {"sweep",
       {{"T", c.sweep.T}, {"n", c.sweep.n}, {"m", c.sweep.m}, {"gamma", c.sweep.gamma},
        {"seeds", c.sweep.seeds}}},
      {"stability", {{"trials", c.trials}, {"test_size", c.test_size}}},
      {"margin", {{"max_iters", c.margin_iters}, {"eps", c.margin_eps}}},
  };
}

}  // namespace sbwc::lab
