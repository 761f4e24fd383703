#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "futilsim/config.hpp"
#include "futilsim/engine.hpp"

namespace futilsim {

enum class FigureId { Fig1, Fig2, Fig5, Fig6, Fig7, Fig8, Fig9 };

FigureId parse_figure_id(const std::string& s);
std::string to_string(FigureId id);

/// 300 patients, 60:40 subgroups, control 0.30, treated 0.40 / 0.65, IA at 40%.
TrialDesign binary_trial_design();
/// 600 patients, 60:40 subgroups, baselines 40 / 20, effects 7 / 3, four
/// sites with effect sd 2.5, IA at 40%.
TrialDesign continuous_trial_design();

/// Scenario behind a figure. Replicate counts are the preset defaults.
ScenarioConfig figure_config(FigureId id);

/// Hybrid cutoffs scanned for the cutoff curve.
std::vector<int> figure_cutoff_grid();

struct ReproduceOptions {
  RunOptions run;
  std::optional<int> replicates;  // overrides the preset count
};

/// Writes <fig>.csv and <fig>.json into `out_dir`; returns the written paths.
std::vector<std::filesystem::path> reproduce_figure(FigureId id, const std::filesystem::path& out_dir,
                                                    const ReproduceOptions& options = {});

/// Shrinkage weight curves: weight against n for several tau2, and weight
/// against tau2 for several n (sigma2 = 1 throughout).
std::vector<std::filesystem::path> write_shrinkage_curves(const std::filesystem::path& out_dir);

}  // namespace futilsim
