#pragma once

// Subcommands of sbwc-lab. Each writes its artifacts under ctx.out and
// returns a process exit code.

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sbwc/lab/config.hpp"
#include "sbwc/lab/ratefit.hpp"
#include "sbwc/properties.hpp"
#include "sbwc/stability.hpp"

namespace sbwc::lab {

enum ExitCode : int {
  kExitOk = 0,
  kExitPropertyFailure = 1,
  kExitUsage = 2,
  kExitRuntime = 3,
};

struct RunContext {
  std::filesystem::path out;
  int jobs = 1;
  bool quiet = false;
  std::ostream* log = nullptr;  // std::cout when null

  std::ostream& os() const;
};

struct ScenarioData {
  std::shared_ptr<const Dataset> data;
  Vec v_star;          // linsep only
  double gamma = 0.0;  // linsep only
};

/// Data for the configured scenario. Generated data uses the "data" stream.
ScenarioData build_scenario(const ExperimentConfig& c);
Objective make_objective(const ExperimentConfig& c, const ScenarioData& s);

nlohmann::json to_json(const MarginCert& m);
nlohmann::json to_json(const RealizabilityCert& r);
nlohmann::json to_json(const InitBound& b);
nlohmann::json to_json(const RateFit& f);
nlohmann::json to_json(const StabilityReport& r);
nlohmann::json to_json(const GenGapReport& r);
nlohmann::json trace_summary(const TrainTrace& t);

/// Per-property aggregate over many instances: worst slack, counts.
struct PropertySummary {
  PropertyReport worst;
  int checked = 0;
  int applicable = 0;
  int failures = 0;
};

struct PropsOptions {
  /// Multiplies kappa inside the SBWC check; -1 is the negative control.
  double kappa_scale = 1.0;
};

/// Trains per the config and runs every property checker on the run.
std::vector<PropertySummary> run_properties(const ExperimentConfig& c,
                                            const PropsOptions& opts = {},
                                            int jobs = 1);

int cmd_train(const ExperimentConfig& c, const RunContext& ctx);
int cmd_props(const ExperimentConfig& c, const RunContext& ctx, const PropsOptions& opts = {});
int cmd_stability(const ExperimentConfig& c, const RunContext& ctx);
int cmd_margin(const ExperimentConfig& c, const RunContext& ctx);
int cmd_sweep(const ExperimentConfig& c, const RunContext& ctx);

struct FitOptions {
  std::filesystem::path input;
  std::string x = "x";
  std::string y = "y";
  std::string group;   // optional column; one fit per distinct value
  bool mean = false;   // average y over rows sharing x before fitting
};
int cmd_fit(const FitOptions& opts, const RunContext& ctx);

/// Turns result files found in `results` into tidy (x, y, series) CSVs plus
/// a matplotlib script under ctx.out/plots.
int cmd_plots(const std::filesystem::path& results, const RunContext& ctx);

int cmd_selftest(const RunContext& ctx);

/// Reads a CSV with a header row; cells are kept as text.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(const std::string& name) const;  // -1 if absent
};
Table read_table(const std::filesystem::path& path);

}  // namespace sbwc::lab
