// sbwc-lab: train, check, sweep and plot from one config file.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "sbwc/lab/commands.hpp"

namespace {

using namespace sbwc::lab;

struct Globals {
  std::string config;
  std::string out;
  long long seed = -1;
  int jobs = 1;
  bool quiet = false;
};

ExperimentConfig load(const Globals& g) {
  ExperimentConfig c = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
  if (g.seed >= 0) c.seed = static_cast<std::uint64_t>(g.seed);
  validate(c);
  return c;
}

RunContext context(const Globals& g, const ExperimentConfig* c) {
  RunContext ctx;
  if (const char* env = std::getenv("SBWC_LAB_OUT"); env && *env)
    ctx.out = env;
  else if (!g.out.empty())
    ctx.out = g.out;
  else
    ctx.out = c ? c->out : ExperimentConfig{}.out;
  ctx.jobs = g.jobs;
  ctx.quiet = g.quiet;
  return ctx;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-bounded weak convexity lab for two-layer networks"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Experiment config (key = value with [tables])");
  app.add_option("--out", g.out, "Output directory (SBWC_LAB_OUT takes precedence)");
  app.add_option("--seed", g.seed, "Override the config seed")->check(CLI::NonNegativeNumber);
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "Only errors on stderr");

  auto* train = app.add_subcommand("train", "Run gradient descent, write trace.csv and summary.json");
  auto* props = app.add_subcommand("props", "Check every inequality along a run; exit 1 on failure");
  bool inject = false;
  props->add_flag("--inject-kappa-fault", inject, "Flip the sign of kappa in the sbwc check");
  auto* stab = app.add_subcommand("stability", "Leave-one-out stability and generalization gaps");
  auto* margin = app.add_subcommand("margin", "NTK margin and realizability certificate");
  auto* sweep = app.add_subcommand("sweep", "Grid over T, n, m, gamma and seeds");
  auto* fit = app.add_subcommand("fit", "Log-log slope of y against x in a CSV");
  FitOptions fo;
  std::string fit_input;
  fit->add_option("input", fit_input, "CSV file with a header row")->required();
  fit->add_option("--x", fo.x, "x column");
  fit->add_option("--y", fo.y, "y column");
  fit->add_option("--group", fo.group, "Fit separately per value of this column");
  fit->add_flag("--mean", fo.mean, "Average y over rows with equal x first");
  auto* plots = app.add_subcommand("plots", "Tidy plot tables and a renderer script");
  std::string plot_input;
  plots->add_option("results", plot_input, "Result directory (default: the output directory)");
  auto* selftest = app.add_subcommand("selftest", "Quick end-to-end check with a negative control");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fit) {
      fo.input = fit_input;
      return cmd_fit(fo, context(g, nullptr));
    }
    if (*plots) {
      const auto ctx = context(g, nullptr);
      return cmd_plots(plot_input.empty() ? ctx.out : std::filesystem::path(plot_input), ctx);
    }
    if (*selftest) return cmd_selftest(context(g, nullptr));
    const ExperimentConfig c = load(g);
    const RunContext ctx = context(g, &c);
    if (*train) return cmd_train(c, ctx);
    if (*props) return cmd_props(c, ctx, {inject ? -1.0 : 1.0});
    if (*stab) return cmd_stability(c, ctx);
    if (*margin) return cmd_margin(c, ctx);
    if (*sweep) return cmd_sweep(c, ctx);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const sbwc::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
