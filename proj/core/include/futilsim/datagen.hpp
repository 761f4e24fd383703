#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "futilsim/model.hpp"

namespace futilsim {

struct Cohort {
  ValidatedDesign design;
  std::vector<PatientRecord> records;  // records[i].id == i
  std::uint64_t seed = 0;
  std::vector<double> site_effects;

  bool operator==(const Cohort&) const = default;
};

struct IASelection {
  std::vector<int> ia_ids;  // sorted ascending
  ShiftSpec target_proportions;
};

struct BaselineSet {
  std::vector<int> available_ids;  // sorted ascending, superset of the IA ids
  double fraction = 1.0;
};

/// How the non-IA part of the available-baseline set is drawn.
enum class BaselineRemainder {
  FinitePopulation,    // uniform without replacement from the cohort's non-IA members
  DesignDistribution,  // subgroup of each extra record drawn from the design proportions
};

Cohort generate_cohort(const ValidatedDesign& design, std::uint64_t seed);

/// Draws an interim subset whose subgroup composition is exactly the
/// largest-remainder quota of `shift`. `stream` selects an independent
/// child stream of the cohort seed so one cohort can serve several shifts.
IASelection select_ia_subset(const Cohort& cohort, const ShiftSpec& shift, std::uint64_t stream = 0);

BaselineSet select_baseline_available(const Cohort& cohort, const IASelection& ia, double fraction,
                                      std::uint64_t seed,
                                      BaselineRemainder mode = BaselineRemainder::FinitePopulation);

std::vector<PatientRecord> gather(const Cohort& cohort, std::span<const int> ids);

/// Copy of the cohort records with in_ia / baseline_available flags set.
std::vector<PatientRecord> flagged_records(const Cohort& cohort, const IASelection& ia,
                                           const BaselineSet* baseline = nullptr);

/// id,subgroup,site,arm,outcome,in_ia,baseline_available
void write_cohort_csv(std::ostream& os, std::span<const PatientRecord> records);

}  // namespace futilsim
