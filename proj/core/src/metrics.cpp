#include "futilsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "futilsim/error.hpp"
#include "futilsim/rng.hpp"
#include "futilsim/util.hpp"

namespace futilsim {

double wasserstein_l1(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySample, "Wasserstein distance needs two non-empty samples");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const std::uint64_t n = x.size();
  const std::uint64_t m = y.size();
  if (n == m) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(x[i] - y[i]);
    return s / static_cast<double>(n);
  }
  // Quantile levels measured in units of 1/(n*m): x[i] covers [i*m, (i+1)*m),
  // y[j] covers [j*n, (j+1)*n). Integer breakpoints keep the weights exact.
  std::uint64_t pos = 0;
  std::size_t i = 0, j = 0;
  double s = 0.0;
  const std::uint64_t end = n * m;
  while (pos < end) {
    const std::uint64_t next = std::min((i + 1) * m, (j + 1) * n);
    s += static_cast<double>(next - pos) * std::abs(x[i] - y[j]);
    pos = next;
    if (pos == (i + 1) * m) ++i;
    if (pos == (j + 1) * n) ++j;
  }
  return s / static_cast<double>(end);
}

double wasserstein_bootstrap_se(std::span<const double> a, std::span<const double> b, int reps,
                                std::uint64_t seed) {
  if (reps < 2) throw Error(ErrorCode::InvalidArgument, "bootstrap needs at least two replicates");
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(reps));
  std::vector<double> ra(a.size()), rb(b.size());
  for (int r = 0; r < reps; ++r) {
    Engine eng(child_seed(seed, StreamTag::Bootstrap, static_cast<std::uint64_t>(r)));
    std::uniform_int_distribution<std::size_t> pa(0, a.size() - 1);
    std::uniform_int_distribution<std::size_t> pb(0, b.size() - 1);
    for (auto& v : ra) v = a[pa(eng)];
    for (auto& v : rb) v = b[pb(eng)];
    stats.push_back(wasserstein_l1(ra, rb));
  }
  return std::sqrt(sample_variance(stats));
}

StopSummary stop_summary(int n_stops, int n_replicates) {
  if (n_replicates <= 0) throw Error(ErrorCode::EmptyInput, "no replicates");
  if (n_stops < 0 || n_stops > n_replicates) throw Error(ErrorCode::InvalidArgument, "stop count out of range");
  StopSummary s;
  s.n_replicates = n_replicates;
  s.n_stops = n_stops;
  s.stop_probability = static_cast<double>(n_stops) / n_replicates;
  s.mc_standard_error = std::sqrt(s.stop_probability * (1.0 - s.stop_probability) / n_replicates);
  return s;
}

StopSummary stop_probability(std::span<const Decision> decisions) {
  if (decisions.empty()) throw Error(ErrorCode::EmptyInput, "no decisions");
  int stops = 0;
  for (const auto& d : decisions) stops += d.stop_for_futility ? 1 : 0;
  return stop_summary(stops, static_cast<int>(decisions.size()));
}

double relative_change(double p, double p_ref) {
  if (!(p_ref > 0.0)) throw Error(ErrorCode::ZeroReference, "reference probability must be positive");
  return (p - p_ref) / p_ref;
}

double correction_fraction(double p_shift, double p_adjusted, double p_bench) {
  if (p_shift == p_bench) throw Error(ErrorCode::DegenerateGap, "shifted and benchmark probabilities coincide");
  return (p_shift - p_adjusted) / (p_shift - p_bench);
}

}  // namespace futilsim
