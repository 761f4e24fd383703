#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "futilsim/model.hpp"

namespace futilsim {

/// Maps a record to its post-stratification cell. A single categorical
/// stratifier: either the subgroup, or the subgroup crossed with site.
struct Stratification {
  enum class Kind { Subgroup, SubgroupBySite };
  Kind kind = Kind::Subgroup;
  int subgroups = 1;
  int sites = 1;

  static Stratification by_subgroup(int k) { return {Kind::Subgroup, k, 1}; }
  static Stratification by_subgroup_and_site(int k, int s) { return {Kind::SubgroupBySite, k, s}; }

  int count() const { return kind == Kind::Subgroup ? subgroups : subgroups * sites; }
  int index(const PatientRecord& r) const {
    return kind == Kind::Subgroup ? r.subgroup_index : r.subgroup_index * sites + r.site_index;
  }
  int subgroup_of(int stratum) const { return kind == Kind::Subgroup ? stratum : stratum / sites; }
  int site_of(int stratum) const { return kind == Kind::Subgroup ? -1 : stratum % sites; }

  /// Design population proportions per cell; sites are equally likely.
  std::vector<double> expand(std::span<const double> subgroup_props) const;
};

struct StratumCell {
  int n = 0;
  double sum = 0.0;
  double mean = 0.0;      // NaN when n == 0
  double variance = 0.0;  // NaN when n < 2
};

struct StratumTable {
  std::vector<StratumCell> cells;

  std::size_t size() const { return cells.size(); }
  int total_n() const;
  double total_sum() const;
  double grand_mean() const;
  /// Observed-sample proportions n_k / n.
  std::vector<double> sample_proportions() const;
};

StratumTable stratum_summaries(std::span<const PatientRecord> records, std::optional<Arm> arm,
                               const Stratification& strata);

struct Proportions {
  enum class Source { DesignTruth, Estimated };
  std::vector<double> p;
  Source source = Source::DesignTruth;
  int n_baseline = 0;

  static Proportions design_truth(std::vector<double> p);
  static Proportions estimated(std::vector<double> p, int n_baseline);
};

double post_stratified_mean(const StratumTable& table, std::span<const double> props);

double shrinkage_weight(double tau2, double sigma2, double n);

struct HierarchicalFit {
  double mu_hat = 0.0;
  double tau2_hat = 0.0;
  double sigma2_hat = 0.0;
  std::vector<double> weights;
  std::vector<double> pooled_means;
};

/// Normal-normal partial pooling with plug-in hyperparameters:
/// pooled within-stratum variance, DerSimonian-Laird moment estimate of the
/// between-stratum variance (truncated at zero), and the precision-weighted
/// grand mean. Empty strata receive the grand mean.
HierarchicalFit fit_hierarchical(const StratumTable& table);

std::vector<double> hybrid_means(const StratumTable& table, std::span<const double> model_means, int cutoff);

/// Stratum shares in the available-baseline records. An absent stratum is an
/// error unless `fallback_to_design` is set; then the design proportion is
/// substituted for each absent stratum and the vector renormalised.
Proportions estimate_stratum_proportions(std::span<const PatientRecord> baseline, const Stratification& strata,
                                         bool fallback_to_design, std::span<const double> design_props);

struct EffectEstimate {
  double value = 0.0;
  std::array<double, 2> per_arm_means{};  // indexed by Arm
  EstimatorSpec method;
  Proportions proportions_used;
};

struct EstimationContext {
  Stratification strata;
  EndpointKind endpoint = EndpointKind::Binary;
};

EffectEstimate estimate_treatment_effect(std::span<const PatientRecord> ia_records, const EstimatorSpec& spec,
                                         const Proportions& props, const EstimationContext& ctx);

/// Per-arm stratum means that feed the post-stratified sum for a given
/// estimator (raw, model-based or hybrid), before weighting.
std::array<std::vector<double>, 2> stratum_means_for(std::span<const PatientRecord> ia_records,
                                                     const EstimatorSpec& spec, const EstimationContext& ctx);

}  // namespace futilsim
