#pragma once

#include <cstdint>
#include <span>

#include "futilsim/futility.hpp"

namespace futilsim {

/// Exact 1-Wasserstein distance between two empirical distributions,
/// integrating |F_a^-1 - F_b^-1| over the merged quantile breakpoints.
double wasserstein_l1(std::span<const double> a, std::span<const double> b);

/// Bootstrap standard error of wasserstein_l1(a, b), resampling both samples.
double wasserstein_bootstrap_se(std::span<const double> a, std::span<const double> b, int reps,
                                std::uint64_t seed);

struct StopSummary {
  int n_replicates = 0;
  int n_stops = 0;
  double stop_probability = 0.0;
  double mc_standard_error = 0.0;
};

StopSummary stop_probability(std::span<const Decision> decisions);
StopSummary stop_summary(int n_stops, int n_replicates);

double relative_change(double p, double p_ref);

/// Share of the shift-induced gap closed by an adjustment:
/// 1 restores the benchmark, 0 leaves the shifted value unchanged.
double correction_fraction(double p_shift, double p_adjusted, double p_bench);

}  // namespace futilsim
