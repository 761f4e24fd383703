#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace futilsim {

inline constexpr double kSimplexTolerance = 1e-12;

enum class Arm : std::uint8_t { Treatment = 0, Control = 1 };

std::string_view to_string(Arm arm) noexcept;

enum class EndpointKind { Binary, Continuous };

struct Endpoint {
  EndpointKind kind = EndpointKind::Binary;
  double residual_sd = 0.0;  // continuous only

  static Endpoint binary() { return {EndpointKind::Binary, 0.0}; }
  static Endpoint continuous(double sd) { return {EndpointKind::Continuous, sd}; }
  bool is_binary() const { return kind == EndpointKind::Binary; }
  bool operator==(const Endpoint&) const = default;
};

/// One population subgroup. For binary endpoints `control_param` and
/// `treatment_effect` are response probabilities; for continuous endpoints
/// they are the control mean and the additive treatment effect.
struct SubgroupSpec {
  std::string label;
  double population_proportion = 0.0;
  double control_param = 0.0;
  double treatment_effect = 0.0;
  bool operator==(const SubgroupSpec&) const = default;
};

struct Allocation {
  int treatment = 1;
  int control = 1;
  bool operator==(const Allocation&) const = default;
};

struct SiteSpec {
  int count = 1;
  double effect_sd = 0.0;
  bool operator==(const SiteSpec&) const = default;
};

enum class Randomization {
  StratifiedBlocks,  // exact arm balance within each subgroup
  Complete,          // exact arm totals, labels permuted across the cohort
};

struct TrialDesign {
  int total_n = 0;
  Allocation allocation;
  Endpoint endpoint;
  std::vector<SubgroupSpec> subgroups;
  SiteSpec sites;
  double ia_fraction = 0.4;
  Randomization randomization = Randomization::StratifiedBlocks;
  bool operator==(const TrialDesign&) const = default;
};

struct ShiftSpec {
  std::vector<double> ia_subgroup_proportions;
  bool operator==(const ShiftSpec&) const = default;
};

struct PatientRecord {
  int id = 0;
  int subgroup_index = 0;
  int site_index = 0;
  Arm arm = Arm::Control;
  double outcome = 0.0;
  bool in_ia = false;
  bool baseline_available = false;
  bool operator==(const PatientRecord&) const = default;
};

struct BetaPrior {
  double alpha = 1.0;
  double beta = 1.0;
  bool operator==(const BetaPrior&) const = default;
};

enum class RuleKind { PosteriorProb, PredictiveProb };

struct FutilityRuleSpec {
  RuleKind kind = RuleKind::PosteriorProb;
  double effect_threshold_delta = 0.2;
  double futility_cut = 0.1;
  BetaPrior prior;
  double final_success_gamma = 0.9;
  int pp_draws = 1000;
  bool operator==(const FutilityRuleSpec&) const = default;
};

enum class ModelKind { HierarchicalNormal, RandomInterceptLmm };

struct ModelSpec {
  ModelKind kind = ModelKind::HierarchicalNormal;
  bool treatment_by_subgroup_interaction = false;
  bool operator==(const ModelSpec&) const = default;
};

enum class EstimatorKind { Unadjusted, NaivePostStrat, ModelBasedPostStrat, HybridPostStrat };

enum class ProportionSourceKind { DesignTruth, EstimatedFromBaseline };

struct ProportionSource {
  ProportionSourceKind kind = ProportionSourceKind::DesignTruth;
  bool fallback_to_design = false;
  bool operator==(const ProportionSource&) const = default;
};

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::Unadjusted;
  ModelSpec model;
  int cutoff = 10;  // hybrid only
  ProportionSource proportion_source;
  bool operator==(const EstimatorSpec&) const = default;
};

/// Largest-remainder apportionment of `total` units across `props`.
/// Ties in the fractional part go to the lower index.
std::vector<int> largest_remainder(std::span<const double> props, int total);

void check_simplex(std::span<const double> props, std::string_view what);

/// A design whose invariants have been checked, with exact subgroup and
/// arm quotas attached. Only constructible through validate_design.
class ValidatedDesign {
 public:
  const TrialDesign& design() const { return design_; }
  int total_n() const { return design_.total_n; }
  int num_subgroups() const { return static_cast<int>(design_.subgroups.size()); }
  int num_sites() const { return design_.sites.count; }
  int ia_size() const { return ia_size_; }

  const std::vector<int>& subgroup_counts() const { return subgroup_counts_; }
  /// [subgroup][arm] cohort counts under stratified randomization.
  const std::vector<std::array<int, 2>>& subgroup_arm_counts() const { return subgroup_arm_counts_; }
  int arm_count(Arm arm) const { return arm_counts_[static_cast<int>(arm)]; }
  std::vector<double> proportions() const;

  bool operator==(const ValidatedDesign&) const = default;

 private:
  friend ValidatedDesign validate_design(const TrialDesign&);
  TrialDesign design_;
  std::vector<int> subgroup_counts_;
  std::vector<std::array<int, 2>> subgroup_arm_counts_;
  std::array<int, 2> arm_counts_{};
  int ia_size_ = 0;
};

ValidatedDesign validate_design(const TrialDesign& design);

void validate_shift(const ValidatedDesign& design, const ShiftSpec& shift);
void validate_rule(const FutilityRuleSpec& rule);

/// True mean outcome of an arm under the design's population proportions.
double true_arm_mean(const TrialDesign& design, Arm arm);
double true_effect(const TrialDesign& design);

}  // namespace futilsim
