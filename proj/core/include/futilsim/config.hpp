#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "futilsim/datagen.hpp"
#include "futilsim/estimators.hpp"
#include "futilsim/model.hpp"

namespace futilsim {

struct NamedEstimator {
  std::string name;
  EstimatorSpec spec;
  bool operator==(const NamedEstimator&) const = default;
};

struct NamedRule {
  std::string name;
  FutilityRuleSpec spec;
  bool operator==(const NamedRule&) const = default;
};

struct OutputSpec {
  bool write_rows = true;
  bool operator==(const OutputSpec&) const = default;
};

struct ScenarioConfig {
  TrialDesign design;
  std::vector<ShiftSpec> shift_grid;
  std::vector<NamedEstimator> estimators;
  std::vector<NamedRule> rules;  // binary endpoints only
  std::vector<double> baseline_fraction_grid{1.0};
  BaselineRemainder baseline_remainder = BaselineRemainder::FinitePopulation;
  Stratification::Kind stratifier = Stratification::Kind::Subgroup;
  int replicates = 1000;
  std::uint64_t master_seed = 1;
  OutputSpec output;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Parses a config document. Every object is strict: an unknown key is a
/// ConfigError, as is a missing required key or a wrongly typed value.
ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config(const std::string& path);

/// Canonical JSON with every default filled in.
std::string to_json(const ScenarioConfig& config, int indent = 2);

/// FNV-1a over the canonical JSON of everything except `output`.
std::uint64_t config_hash(const ScenarioConfig& config);

/// Throws ConfigError unless the config is runnable: valid design, shifts
/// and rules, nonempty grids, unique names, replicates >= 1.
ValidatedDesign validate_config(const ScenarioConfig& config);

std::string to_string(EstimatorKind kind);
std::string to_string(RuleKind kind);

}  // namespace futilsim
