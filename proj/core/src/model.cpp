#include "futilsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "futilsim/error.hpp"

namespace futilsim {

std::string_view to_string(Arm arm) noexcept {
  return arm == Arm::Treatment ? "treatment" : "control";
}

void check_simplex(std::span<const double> props, std::string_view what) {
  if (props.empty()) {
    throw Error(ErrorCode::InvalidProportions, std::string(what) + " is empty");
  }
  double sum = 0.0;
  for (double p : props) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw Error(ErrorCode::InvalidProportions,
                  std::string(what) + " has an entry outside [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    std::ostringstream os;
    os << what << " sums to " << sum << ", not 1";
    throw Error(ErrorCode::InvalidProportions, os.str());
  }
}

std::vector<int> largest_remainder(std::span<const double> props, int total) {
  if (total < 0) throw Error(ErrorCode::InvalidArgument, "negative total for apportionment");
  const std::size_t k = props.size();
  std::vector<int> counts(k, 0);
  std::vector<double> frac(k, 0.0);
  int assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double exact = props[i] * total;
    // Guard against products like 0.7 * 120 landing a hair below 84.
    const double base = std::floor(exact + 1e-9);
    counts[i] = static_cast<int>(base);
    frac[i] = std::max(0.0, exact - base);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t i = 0; assigned < total; i = (i + 1) % k) {
    ++counts[order[i]];
    ++assigned;
  }
  while (assigned > total) {
    // Only reachable through the epsilon guard; take back from the smallest remainder.
    auto it = std::find_if(order.rbegin(), order.rend(), [&](std::size_t i) { return counts[i] > 0; });
    --counts[*it];
    --assigned;
  }
  return counts;
}

std::vector<double> ValidatedDesign::proportions() const {
  std::vector<double> p;
  p.reserve(design_.subgroups.size());
  for (const auto& s : design_.subgroups) p.push_back(s.population_proportion);
  return p;
}

ValidatedDesign validate_design(const TrialDesign& design) {
  if (design.total_n <= 0) throw Error(ErrorCode::NonPositiveN, "total_n must be positive");
  if (design.subgroups.empty()) throw Error(ErrorCode::InvalidProportions, "design has no subgroups");

  std::vector<double> props;
  for (const auto& s : design.subgroups) {
    if (!(s.population_proportion > 0.0 && s.population_proportion <= 1.0)) {
      throw Error(ErrorCode::InvalidProportions,
                  "subgroup '" + s.label + "' proportion must lie in (0, 1]");
    }
    if (design.endpoint.is_binary()) {
      const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
      if (!in_unit(s.control_param) || !in_unit(s.treatment_effect)) {
        throw Error(ErrorCode::InvalidDesign,
                    "subgroup '" + s.label + "' response probabilities must lie in [0, 1]");
      }
    } else if (!std::isfinite(s.control_param) || !std::isfinite(s.treatment_effect)) {
      throw Error(ErrorCode::InvalidDesign, "subgroup '" + s.label + "' has non-finite parameters");
    }
    props.push_back(s.population_proportion);
  }
  check_simplex(props, "subgroup proportions");

  if (!design.endpoint.is_binary() &&
      !(design.endpoint.residual_sd >= 0.0 && std::isfinite(design.endpoint.residual_sd))) {
    throw Error(ErrorCode::InvalidDesign, "residual_sd must be non-negative");
  }
  if (design.sites.count < 1) throw Error(ErrorCode::InvalidDesign, "sites.count must be >= 1");
  if (!(design.sites.effect_sd >= 0.0)) throw Error(ErrorCode::InvalidDesign, "sites.effect_sd must be >= 0");
  if (!(design.ia_fraction > 0.0 && design.ia_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidDesign, "ia_fraction must lie in (0, 1]");
  }
  if (design.allocation.treatment < 1 || design.allocation.control < 1) {
    throw Error(ErrorCode::InvalidDesign, "allocation ratio entries must be >= 1");
  }

  ValidatedDesign v;
  v.design_ = design;
  v.subgroup_counts_ = largest_remainder(props, design.total_n);
  for (std::size_t k = 0; k < props.size(); ++k) {
    if (v.subgroup_counts_[k] == 0) {
      throw Error(ErrorCode::InfeasibleQuota,
                  "subgroup '" + design.subgroups[k].label + "' rounds to zero patients");
    }
  }

  const double block = design.allocation.treatment + design.allocation.control;
  const std::array<double, 2> share{design.allocation.treatment / block,
                                    design.allocation.control / block};
  if (design.randomization == Randomization::StratifiedBlocks) {
    for (int n_k : v.subgroup_counts_) {
      const auto arms = largest_remainder(share, n_k);
      v.subgroup_arm_counts_.push_back({arms[0], arms[1]});
      v.arm_counts_[0] += arms[0];
      v.arm_counts_[1] += arms[1];
    }
  } else {
    const auto arms = largest_remainder(share, design.total_n);
    v.arm_counts_ = {arms[0], arms[1]};
    // Per-subgroup arm split is random under complete randomization; record
    // the expected split for reference only.
    for (int n_k : v.subgroup_counts_) {
      const auto e = largest_remainder(share, n_k);
      v.subgroup_arm_counts_.push_back({e[0], e[1]});
    }
  }

  v.ia_size_ = static_cast<int>(std::lround(design.total_n * design.ia_fraction));
  const auto ia_arms = largest_remainder(share, v.ia_size_);
  if (ia_arms[0] < 2 || ia_arms[1] < 2) {
    throw Error(ErrorCode::InvalidDesign, "interim analysis must hold at least 2 patients per arm");
  }
  return v;
}

void validate_shift(const ValidatedDesign& design, const ShiftSpec& shift) {
  if (static_cast<int>(shift.ia_subgroup_proportions.size()) != design.num_subgroups()) {
    throw Error(ErrorCode::LengthMismatch, "shift has a different number of subgroups than the design");
  }
  check_simplex(shift.ia_subgroup_proportions, "IA subgroup proportions");
}

void validate_rule(const FutilityRuleSpec& rule) {
  if (!(rule.futility_cut > 0.0 && rule.futility_cut < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "futility_cut must lie in (0, 1)");
  }
  if (!(rule.effect_threshold_delta > -1.0 && rule.effect_threshold_delta < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "effect_threshold_delta must lie in (-1, 1)");
  }
  if (!(rule.prior.alpha > 0.0 && rule.prior.beta > 0.0) || !std::isfinite(rule.prior.alpha) ||
      !std::isfinite(rule.prior.beta)) {
    throw Error(ErrorCode::InvalidArgument, "prior parameters must be positive and finite");
  }
  if (rule.kind == RuleKind::PredictiveProb) {
    // gamma = 1 is accepted and treated as an unattainable success criterion.
    if (!(rule.final_success_gamma > 0.0 && rule.final_success_gamma <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "final_success_gamma must lie in (0, 1]");
    }
    if (rule.pp_draws < 1) throw Error(ErrorCode::InvalidArgument, "pp_draws must be >= 1");
  }
}

double true_arm_mean(const TrialDesign& design, Arm arm) {
  double m = 0.0;
  for (const auto& s : design.subgroups) {
    double mu;
    if (design.endpoint.is_binary()) {
      mu = arm == Arm::Treatment ? s.treatment_effect : s.control_param;
    } else {
      mu = s.control_param + (arm == Arm::Treatment ? s.treatment_effect : 0.0);
    }
    m += s.population_proportion * mu;
  }
  return m;
}

double true_effect(const TrialDesign& design) {
  return true_arm_mean(design, Arm::Treatment) - true_arm_mean(design, Arm::Control);
}

}  // namespace futilsim
