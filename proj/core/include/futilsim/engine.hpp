#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "futilsim/config.hpp"
#include "futilsim/metrics.hpp"

namespace futilsim {

inline constexpr const char* kVersion = "1.0.0";

/// One (replicate, cell, estimator, rule) outcome. Failed rows keep the
/// error text and carry NaN values.
struct ResultRow {
  int replicate = 0;
  int shift_index = 0;
  int fraction_index = 0;
  int estimator_index = 0;
  int rule_index = -1;  // -1 when the config has no rules
  double effect = 0.0;
  double treat_mean = 0.0;
  double ctrl_mean = 0.0;
  double statistic = 0.0;  // NaN without a rule
  int stop = -1;           // 1 stop, 0 continue, -1 no rule or failed
  std::string error;
};

struct AggregateRow {
  int shift_index = 0;
  int fraction_index = 0;
  int estimator_index = 0;
  int rule_index = -1;
  int n_ok = 0;
  int n_errors = 0;
  double mean_effect = 0.0;
  double var_effect = 0.0;
  double mc_se_effect = 0.0;
  std::optional<StopSummary> stops;
  double relative_change = 0.0;      // NaN when undefined
  double correction_fraction = 0.0;  // NaN when undefined
};

struct ScenarioResult {
  ScenarioConfig config;
  std::uint64_t config_hash = 0;
  std::vector<ResultRow> rows;  // ordered by (shift, fraction, replicate, estimator, rule)
  std::vector<AggregateRow> aggregates;
  int n_errors = 0;
  std::optional<int> benchmark_shift;     // shift equal to the design proportions
  std::optional<int> reference_estimator; // first unadjusted estimator

  const AggregateRow& aggregate(int shift, int fraction, int estimator, int rule) const;
  /// Effect estimates of successful rows for one cell, in replicate order.
  std::vector<double> effects(int shift, int fraction, int estimator, int rule = -1) const;
};

struct RunOptions {
  int workers = 1;
};

/// Worker count from FUTILSIM_WORKERS, else the hardware concurrency.
int default_workers();

ScenarioResult run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

/// Recomputes the aggregate table from rows; run_scenario uses the same code.
std::vector<AggregateRow> aggregate_rows(const ScenarioConfig& config, const std::vector<ResultRow>& rows,
                                         std::optional<int> benchmark_shift, std::optional<int> reference_estimator);

/// rows.csv (unless disabled), aggregates.csv and provenance.json.
std::vector<std::filesystem::path> write_outputs(const ScenarioResult& result, const std::filesystem::path& dir);

struct CutoffCurve {
  std::vector<int> cutoffs;
  std::vector<double> distances;
  int argmin = 0;  // cutoff value attaining the smallest distance (first on ties)
  double naive_distance = 0.0;
  double model_distance = 0.0;
  double argmin_bootstrap_se = 0.0;
  std::vector<double> benchmark;  // unadjusted estimates on representative samples
};

/// W1 between the hybrid estimates at each cutoff and the benchmark
/// distribution. The config must hold the design shift and exactly one
/// other shift; the model comes from the config's first hybrid or
/// model-based estimator (random-intercept LMM without interaction if none).
CutoffCurve tune_hybrid_cutoff(const ScenarioConfig& config, const std::vector<int>& cutoff_grid,
                               const RunOptions& options = {});

}  // namespace futilsim
