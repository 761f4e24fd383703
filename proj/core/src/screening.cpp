#include "futilsim/screening.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "futilsim/error.hpp"
#include "futilsim/rng.hpp"

namespace futilsim {

double chi_square_gof(std::span<const int> observed_counts, std::span<const double> expected_props) {
  if (observed_counts.size() != expected_props.size()) {
    throw Error(ErrorCode::LengthMismatch, "counts and proportions differ in length");
  }
  long total = 0;
  for (int c : observed_counts) {
    if (c < 0) throw Error(ErrorCode::InvalidArgument, "negative count");
    total += c;
  }
  if (total < 1) throw Error(ErrorCode::EmptyInput, "no observations");
  double stat = 0.0;
  for (std::size_t k = 0; k < observed_counts.size(); ++k) {
    const double e = expected_props[k] * static_cast<double>(total);
    if (expected_props[k] <= 0.0) {
      if (observed_counts[k] > 0) {
        throw Error(ErrorCode::ZeroExpected, "category " + std::to_string(k) + " observed with zero expected share");
      }
      continue;
    }
    const double d = observed_counts[k] - e;
    stat += d * d / e;
  }
  return stat;
}

BaselineFrame::BaselineFrame(std::vector<int> ids) {
  order_.resize(ids.size());
  std::vector<std::size_t> pos(ids.size());
  std::iota(pos.begin(), pos.end(), 0);
  std::stable_sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  ids_.reserve(ids.size());
  for (std::size_t r = 0; r < pos.size(); ++r) {
    ids_.push_back(ids[pos[r]]);
    order_[pos[r]] = r;
  }
  if (std::adjacent_find(ids_.begin(), ids_.end()) != ids_.end()) {
    throw Error(ErrorCode::InvalidArgument, "duplicate patient id in baseline frame");
  }
}

void BaselineFrame::add_variable(const std::string& name, std::vector<int> codes) {
  if (codes.size() != ids_.size()) throw Error(ErrorCode::LengthMismatch, "column '" + name + "' has the wrong length");
  std::vector<int> sorted(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) sorted[order_[i]] = codes[i];
  columns_[name] = std::move(sorted);
}

BaselineFrame BaselineFrame::from_records(std::span<const PatientRecord> records) {
  std::vector<int> ids, sg, site;
  for (const auto& r : records) {
    ids.push_back(r.id);
    sg.push_back(r.subgroup_index);
    site.push_back(r.site_index);
  }
  BaselineFrame f(std::move(ids));
  f.add_variable("subgroup", std::move(sg));
  f.add_variable("site", std::move(site));
  return f;
}

const std::vector<int>& BaselineFrame::column(const std::string& name) const {
  auto it = columns_.find(name);
  if (it == columns_.end()) throw Error(ErrorCode::VariableMissing, "no baseline variable '" + name + "'");
  return it->second;
}

std::vector<std::string> BaselineFrame::variables() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : columns_) out.push_back(k);
  return out;
}

int BaselineFrame::row_of(int id) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) return -1;
  return static_cast<int>(it - ids_.begin());
}

PermResult permutation_shift_test(const BaselineFrame& baseline, std::span<const int> ia_ids,
                                  const std::string& variable, int B, std::uint64_t seed) {
  if (B < 1) throw Error(ErrorCode::InvalidArgument, "B must be >= 1");
  const auto& codes = baseline.column(variable);

  int levels = 0;
  for (int c : codes) levels = std::max(levels, c + 1);
  if (levels == 0) throw Error(ErrorCode::VariableMissing, "variable '" + variable + "' has no observed values");

  std::vector<int> ia_rows;
  ia_rows.reserve(ia_ids.size());
  for (int id : ia_ids) {
    const int r = baseline.row_of(id);
    if (r < 0) throw Error(ErrorCode::IaNotSubset, "IA patient " + std::to_string(id) + " has no baseline row");
    ia_rows.push_back(r);
  }
  if (ia_rows.empty()) throw Error(ErrorCode::EmptyInput, "IA set is empty");

  const auto counts_of = [&](auto rows_begin, auto rows_end) {
    std::vector<int> counts(static_cast<std::size_t>(levels), 0);
    for (auto it = rows_begin; it != rows_end; ++it) {
      const int c = codes[static_cast<std::size_t>(*it)];
      if (c >= 0) ++counts[c];
    }
    return counts;
  };

  std::vector<int> all_rows(baseline.rows());
  std::iota(all_rows.begin(), all_rows.end(), 0);
  const auto full = counts_of(all_rows.begin(), all_rows.end());
  const double n_obs = std::accumulate(full.begin(), full.end(), 0.0);
  std::vector<double> props(full.size());
  for (std::size_t k = 0; k < full.size(); ++k) props[k] = full[k] / n_obs;

  const auto ia_counts = counts_of(ia_rows.begin(), ia_rows.end());
  if (std::accumulate(ia_counts.begin(), ia_counts.end(), 0) == 0) {
    throw Error(ErrorCode::VariableMissing, "variable '" + variable + "' is missing for every IA patient");
  }

  PermResult res;
  res.B = B;
  res.observed_stat = chi_square_gof(ia_counts, props);
  res.null_stats.resize(static_cast<std::size_t>(B));
  const std::size_t m = ia_rows.size();
  std::vector<int> pool(baseline.rows());
  int at_least = 0;
  const double tie_tol = 1e-12 * std::max(1.0, res.observed_stat);
  for (int b = 0; b < B; ++b) {
    Engine eng(child_seed(seed, StreamTag::Permutation, static_cast<std::uint64_t>(b)));
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < m && i + 1 < pool.size(); ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(eng)]);
    }
    const auto sub = counts_of(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
    double stat = 0.0;
    if (std::accumulate(sub.begin(), sub.end(), 0) > 0) stat = chi_square_gof(sub, props);
    res.null_stats[b] = stat;
    if (stat >= res.observed_stat - tie_tol) ++at_least;
  }
  res.p_value = (1.0 + at_least) / (B + 1.0);
  return res;
}

ScreenResult screen_stratifiers(const BaselineFrame& baseline, std::span<const int> ia_ids,
                                std::span<const std::string> candidates, double alpha, int B,
                                std::uint64_t seed, bool bonferroni) {
  if (candidates.empty()) throw Error(ErrorCode::EmptyInput, "no candidate variables");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");
  const double level = bonferroni ? alpha / static_cast<double>(candidates.size()) : alpha;
  ScreenResult out;
  for (const auto& name : candidates) {
    auto r = permutation_shift_test(baseline, ia_ids, name, B, child_seed(seed, StreamTag::Variable, hash_name(name)));
    if (r.p_value <= level) out.selected.push_back(name);
    out.tests.emplace_back(name, std::move(r));
  }
  return out;
}

}  // namespace futilsim
