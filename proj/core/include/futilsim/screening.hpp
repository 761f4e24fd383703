#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "futilsim/model.hpp"

namespace futilsim {

inline constexpr int kDefaultPermutations = 2000;

struct PermResult {
  double observed_stat = 0.0;
  std::vector<double> null_stats;  // ordered by subsample index
  double p_value = 1.0;
  int B = 0;
};

/// Pearson goodness-of-fit statistic of `observed_counts` against
/// `expected_props` scaled to the observed total.
double chi_square_gof(std::span<const int> observed_counts, std::span<const double> expected_props);

/// Categorical baseline variables for the patients whose baseline data is
/// available. Rows are kept sorted by patient id so results do not depend on
/// input order. Code -1 marks a missing value.
class BaselineFrame {
 public:
  BaselineFrame() = default;
  explicit BaselineFrame(std::vector<int> ids);

  void add_variable(const std::string& name, std::vector<int> codes);
  /// Columns "subgroup" and "site" built from simulated records.
  static BaselineFrame from_records(std::span<const PatientRecord> records);

  std::size_t rows() const { return ids_.size(); }
  const std::vector<int>& ids() const { return ids_; }
  bool has_variable(const std::string& name) const { return columns_.count(name) > 0; }
  const std::vector<int>& column(const std::string& name) const;
  std::vector<std::string> variables() const;
  /// Row index of a patient id, or -1.
  int row_of(int id) const;

 private:
  std::vector<int> ids_;
  std::vector<std::size_t> order_;  // input position -> sorted row
  std::map<std::string, std::vector<int>> columns_;
};

PermResult permutation_shift_test(const BaselineFrame& baseline, std::span<const int> ia_ids,
                                  const std::string& variable, int B, std::uint64_t seed);

struct ScreenResult {
  std::vector<std::string> selected;
  std::vector<std::pair<std::string, PermResult>> tests;  // in candidate order
};

/// Keeps candidates with p <= alpha (alpha / m with `bonferroni`). Each
/// candidate draws from its own stream keyed by the variable name.
ScreenResult screen_stratifiers(const BaselineFrame& baseline, std::span<const int> ia_ids,
                                std::span<const std::string> candidates, double alpha, int B,
                                std::uint64_t seed, bool bonferroni = false);

}  // namespace futilsim
