#pragma once

// Experiment configuration: a key = value text format with [table] headers,
// e.g.
//
//   seed = 7
//   [scenario]
//   kind = linsep
//   gamma = 0.5
//   [shape]
//   m = 256
//   d = 10
//
// Every field has a default; unknown keys are rejected.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sbwc/model.hpp"
#include "sbwc/trainer.hpp"

namespace sbwc::lab {

struct ScenarioConfig {
  std::string kind = "xor";  // xor | linsep | csv
  int n = 64;
  double gamma = 0.5;        // linsep only
  std::string path;          // csv only
  bool operator==(const ScenarioConfig&) const = default;
};

struct SweepConfig {
  std::vector<long> T{32, 64, 128, 256};
  std::vector<int> n{32, 64, 128};
  std::vector<int> m{256};
  std::vector<double> gamma{0.5};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  bool operator==(const SweepConfig&) const = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string out = "sbwc-out";
  double delta = 0.1;

  ScenarioConfig scenario;
  int m = 256;  // shape.m
  int d = 4;    // shape.d
  std::string activation = "softplus";
  std::string loss = "logistic";

  // train table
  std::string step = "smoothness";
  long T = 200;
  std::string init = "gaussian";
  long record_every = 20;

  SweepConfig sweep;

  // stability table
  int trials = 20;
  int test_size = 10000;

  // margin table
  long margin_iters = 2000;
  double margin_eps = 0.1;

  bool operator==(const ExperimentConfig&) const = default;

  ActivationSpec activation_spec() const { return ActivationSpec::parse(activation); }
  LossSpec loss_spec() const { return LossSpec::parse(loss); }
  StepPolicy step_policy() const { return StepPolicy::parse(step); }
  InitSpec init_spec() const { return InitSpec::parse(init); }
};

/// Raised for invalid field values; the message starts with the field path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Parses and validates. Syntax errors throw ParseError("<source>:<line>: ...").
ExperimentConfig parse_config(std::string_view text, std::string_view source = "config");
ExperimentConfig load_config(const std::string& path);

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& c);

/// Throws ConfigError naming the first offending field.
void validate(const ExperimentConfig& c);

nlohmann::json to_json(const ExperimentConfig& c);

}  // namespace sbwc::lab
