#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace futilsim {

/// Random streams are addressed by (parent seed, purpose, index) rather than
/// by draw order, so every replicate and every subsample owns an
/// independent generator regardless of how work is scheduled.
enum class StreamTag : std::uint64_t {
  Cell = 1,
  Replicate = 2,
  Cohort = 3,
  IaSelection = 4,
  Baseline = 5,
  Predictive = 6,
  Permutation = 7,
  Bootstrap = 8,
  Benchmark = 9,
  Variable = 10,
};

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t child_seed(std::uint64_t parent, std::uint64_t tag,
                                   std::uint64_t index) noexcept {
  return mix64(mix64(mix64(parent) ^ tag) + index);
}

constexpr std::uint64_t child_seed(std::uint64_t parent, StreamTag tag,
                                   std::uint64_t index) noexcept {
  return child_seed(parent, static_cast<std::uint64_t>(tag), index);
}

// FNV-1a; used to turn names (variables, labels) into stream indices.
constexpr std::uint64_t hash_name(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

/// Draw from Beta(a, b) through two gamma variates.
template <class Gen>
double beta_draw(Gen& gen, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(gen);
  const double y = gb(gen);
  return x / (x + y);
}

/// Binomial(n, p) by sequential inversion; the std distribution is used
/// when (1 - p)^n underflows.
template <class Gen>
int binomial_draw(Gen& gen, int n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  const bool flip = p > 0.5;
  const double q = flip ? 1.0 - p : p;
  double f = std::pow(1.0 - q, n);
  if (!(f > 0.0)) {
    std::binomial_distribution<int> bin(n, p);
    return bin(gen);
  }
  const double ratio = q / (1.0 - q);
  double u = std::generate_canonical<double, 53>(gen);
  int x = 0;
  while (u > f && x < n) {
    u -= f;
    f *= ratio * (n - x) / (x + 1);
    ++x;
  }
  return flip ? n - x : x;
}

}  // namespace futilsim
