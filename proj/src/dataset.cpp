#include "sbwc/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "sbwc/format.hpp"
#include "sbwc/rng.hpp"

namespace sbwc {

double Dataset::max_norm() const {
  double r = 0.0;
  for (int i = 0; i < n(); ++i) r = std::max(r, X.row(i).norm());
  return r;
}

void Dataset::validate() const {
  if (static_cast<int>(y.size()) != n())
    throw DimensionError("dataset: label count does not match rows");
  for (int label : y)
    if (label != 1 && label != -1) throw DomainError("dataset: labels must be +-1");
  // Allow rounding in the recorded radius.
  if (max_norm() > R * (1.0 + 1e-12) + 1e-15)
    throw DomainError("dataset: a feature vector exceeds the recorded radius");
}

Dataset Dataset::slice(int first, int count) const {
  Dataset out;
  out.X = X.middleRows(first, count);
  out.y.assign(y.begin() + first, y.begin() + first + count);
  out.R = R;
  out.provenance = provenance + "[" + std::to_string(first) + ":" +
                   std::to_string(first + count) + "]";
  return out;
}

namespace {

void fill_xor_row(int d, int pair, std::uint64_t noise_bits, double* row,
                  int& label) {
  static constexpr int kPairs[4][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const double s = 1.0 / std::sqrt(static_cast<double>(d - 1));
  row[0] = kPairs[pair][0] * s;
  row[1] = kPairs[pair][1] * s;
  for (int k = 2; k < d; ++k)
    row[k] = ((noise_bits >> (k - 2)) & 1U) ? s : -s;
  label = kPairs[pair][0] == 0 ? -1 : 1;
}

}  // namespace

Dataset gen_xor(int d, int n, std::uint64_t seed) {
  if (d < 3) throw DomainError("gen_xor: d must be at least 3");
  if (n < 1) throw DomainError("gen_xor: n must be at least 1");
  if (d - 2 > 62) throw DomainError("gen_xor: d too large");
  Rng rng = make_rng(seed, "xor");
  std::uniform_int_distribution<int> pair_dist(0, 3);
  std::uniform_int_distribution<std::uint64_t> bits(
      0, (std::uint64_t{1} << (d - 2)) - 1);
  Dataset out;
  out.X.resize(n, d);
  out.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const int pair = pair_dist(rng);
    fill_xor_row(d, pair, bits(rng), out.X.row(i).data(), out.y[i]);
  }
  out.R = 1.0;
  out.provenance = "xor(d=" + std::to_string(d) + ",seed=" + std::to_string(seed) + ")";
  return out;
}

Dataset xor_support(int d) {
  if (d < 3) throw DomainError("xor_support: d must be at least 3");
  if (d > 24) throw DomainError("xor_support: support too large");
  const int n = 4 << (d - 2);
  Dataset out;
  out.X.resize(n, d);
  out.y.resize(n);
  for (int i = 0; i < n; ++i)
    fill_xor_row(d, i >> (d - 2), static_cast<std::uint64_t>(i) & ((1U << (d - 2)) - 1),
                 out.X.row(i).data(), out.y[i]);
  out.R = 1.0;
  out.provenance = "xor_support(d=" + std::to_string(d) + ")";
  return out;
}

namespace {

Vec random_unit(int d, Rng& rng) {
  std::normal_distribution<double> g;
  Vec v(d);
  double nv = 0.0;
  do {
    for (double& c : v) c = g(rng);
    nv = norm(v);
  } while (nv == 0.0);
  for (double& c : v) c /= nv;
  return v;
}

}  // namespace

LinsepSample gen_linsep_with(std::span<const double> v_star, double gamma,
                             int n, std::uint64_t seed) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw DomainError("gen_linsep: gamma must lie in (0, 1)");
  const int d = static_cast<int>(v_star.size());
  if (d < 2) throw DomainError("gen_linsep: d must be at least 2");
  Rng rng = make_rng(seed, "linsep_points");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  LinsepSample out;
  out.v_star.assign(v_star.begin(), v_star.end());
  out.data.X.resize(n, d);
  out.data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    Vec x = random_unit(d, rng);
    double p = dot(x, v_star);
    if (std::abs(p) < gamma) {
      // Orthogonal part keeps its direction; the v* component moves out of
      // the band to |p'| in [gamma, 1).
      const double sgn = p >= 0.0 ? 1.0 : -1.0;
      const double p_new = sgn * (gamma + (1.0 - gamma) * unif(rng));
      Vec perp = x;
      axpy(-p, v_star, perp);
      const double np = norm(perp);
      const double target = std::sqrt(std::max(0.0, 1.0 - p_new * p_new));
      for (int k = 0; k < d; ++k)
        x[k] = p_new * v_star[k] + (np > 0.0 ? perp[k] * target / np : 0.0);
      p = p_new;
    }
    for (int k = 0; k < d; ++k) out.data.X(i, k) = x[k];
    out.data.y[i] = p >= 0.0 ? 1 : -1;
  }
  out.data.R = 1.0;
  out.data.provenance = "linsep(d=" + std::to_string(d) + ",gamma=" +
                        format_double(gamma) + ",seed=" + std::to_string(seed) + ")";
  return out;
}

LinsepSample gen_linsep(int d, double gamma, int n, std::uint64_t seed) {
  Rng rng = make_rng(seed, "linsep_direction");
  const Vec v = random_unit(d, rng);
  return gen_linsep_with(v, gamma, n, seed);
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<Vec> rows;
  std::vector<int> labels;
  std::string line;
  int lineno = 0;
  int d = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    auto fail = [&](const std::string& why) {
      return ParseError(path.string() + ":" + std::to_string(lineno) + ": " + why);
    };
    if (fields.size() < 2) throw fail("expected label and at least one feature");
    double label = 0.0;
    try {
      label = parse_double(fields[0]);
    } catch (const ParseError&) {
      throw fail("bad label '" + std::string(fields[0]) + "'");
    }
    if (label != 1.0 && label != -1.0)
      throw fail("label must be +1 or -1, got '" + std::string(fields[0]) + "'");
    const int this_d = static_cast<int>(fields.size()) - 1;
    if (d < 0) d = this_d;
    if (this_d != d)
      throw fail("expected " + std::to_string(d) + " features, got " +
                 std::to_string(this_d));
    Vec row(d);
    for (int k = 0; k < d; ++k) {
      try {
        row[k] = parse_double(fields[k + 1]);
      } catch (const ParseError&) {
        throw fail("bad feature '" + std::string(fields[k + 1]) + "'");
      }
      if (!std::isfinite(row[k])) throw fail("non-finite feature");
    }
    rows.push_back(std::move(row));
    labels.push_back(static_cast<int>(label));
  }
  if (rows.empty()) throw ParseError(path.string() + ": no rows");
  Dataset out;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int k = 0; k < d; ++k) out.X(static_cast<Eigen::Index>(i), k) = rows[i][k];
  out.y = std::move(labels);
  out.R = out.max_norm();
  out.provenance = "csv(" + path.string() + ")";
  return out;
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (int i = 0; i < data.n(); ++i) {
    out << (data.y[i] > 0 ? "1" : "-1");
    for (int k = 0; k < data.d(); ++k) out << ',' << format_double(data.X(i, k));
    out << '\n';
  }
}

}  // namespace sbwc
