#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "futilsim/model.hpp"

namespace futilsim {

struct ArmPosterior {
  double alpha = 1.0;
  double beta = 1.0;

  bool operator==(const ArmPosterior&) const = default;
};

/// Beta posterior from a (possibly post-stratified) mean and an effective
/// sample size; fractional pseudo-counts are allowed.
ArmPosterior beta_posterior(double mean, double n_effective, const BetaPrior& prior);

/// Same bridge, from a success count rather than a mean.
ArmPosterior beta_posterior_from_counts(double successes, double n, const BetaPrior& prior);

inline constexpr double kQuadratureTolerance = 1e-6;

/// P(p_t - p_c > delta) for independent Beta posteriors.
double posterior_prob_effect_exceeds(const ArmPosterior& treat, const ArmPosterior& ctrl, double delta);

struct Decision {
  bool stop_for_futility = false;
  double statistic = 0.0;
  FutilityRuleSpec rule;

  bool operator==(const Decision&) const = default;
};

/// stop iff statistic < cut (strict).
Decision decide(double statistic, const FutilityRuleSpec& rule);

/// Interim arm summary fed to a futility rule: a mean on the response scale
/// and the number of patients behind it.
struct ArmSummary {
  double mean = 0.0;
  double n = 0.0;
};

Decision evaluate_posterior_rule(const ArmSummary& treat, const ArmSummary& ctrl, const FutilityRuleSpec& rule);

struct StratumCount {
  double successes = 0.0;
  int n = 0;
};

/// Interim state of one arm for the predictive rule. `current` is the
/// posterior the final analysis builds on (raw or adjusted pseudo-counts);
/// `strata` are the raw per-stratum counts used to draw response rates for
/// patients still to be enrolled. With no strata the arm-level posterior is
/// used for the future draws.
struct PredictiveArm {
  ArmPosterior current;
  std::vector<StratumCount> strata;
};

/// Monte Carlo predictive probability that the final analysis meets
/// P(p_t - p_c > delta) >= gamma, with `remaining` patients per arm
/// (indexed by Arm) enrolled in `planned_props` proportions.
Decision predictive_probability(const PredictiveArm& treat, const PredictiveArm& ctrl,
                                std::array<int, 2> remaining, std::span<const double> planned_props,
                                const FutilityRuleSpec& rule, std::uint64_t seed);

}  // namespace futilsim
