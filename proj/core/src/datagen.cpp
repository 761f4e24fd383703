#include "futilsim/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "futilsim/error.hpp"
#include "futilsim/rng.hpp"
#include "futilsim/util.hpp"

namespace futilsim {

namespace {

// First `k` entries of `pool` become a uniform random k-subset.
void partial_shuffle(std::vector<int>& pool, std::size_t k, Engine& eng) {
  for (std::size_t i = 0; i < k && i + 1 < pool.size(); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(eng)]);
  }
}

}  // namespace

Cohort generate_cohort(const ValidatedDesign& vd, std::uint64_t seed) {
  const TrialDesign& d = vd.design();
  Cohort c{vd, {}, seed, {}};
  c.records.reserve(static_cast<std::size_t>(d.total_n));

  Engine site_eng(child_seed(seed, StreamTag::Cohort, 0));
  Engine arm_eng(child_seed(seed, StreamTag::Cohort, 1));
  Engine outcome_eng(child_seed(seed, StreamTag::Cohort, 2));

  c.site_effects.assign(static_cast<std::size_t>(d.sites.count), 0.0);
  if (d.sites.effect_sd > 0.0) {
    std::normal_distribution<double> site_dist(0.0, d.sites.effect_sd);
    for (double& u : c.site_effects) u = site_dist(site_eng);
  }

  int id = 0;
  for (int k = 0; k < vd.num_subgroups(); ++k) {
    for (int j = 0; j < vd.subgroup_counts()[k]; ++j) {
      PatientRecord r;
      r.id = id++;
      r.subgroup_index = k;
      c.records.push_back(r);
    }
  }

  std::uniform_int_distribution<int> site_pick(0, d.sites.count - 1);
  for (auto& r : c.records) r.site_index = site_pick(site_eng);

  if (d.randomization == Randomization::StratifiedBlocks) {
    int offset = 0;
    for (int k = 0; k < vd.num_subgroups(); ++k) {
      const auto& arms = vd.subgroup_arm_counts()[k];
      std::vector<Arm> labels(arms[0], Arm::Treatment);
      labels.insert(labels.end(), arms[1], Arm::Control);
      std::shuffle(labels.begin(), labels.end(), arm_eng);
      for (std::size_t j = 0; j < labels.size(); ++j) c.records[offset + j].arm = labels[j];
      offset += vd.subgroup_counts()[k];
    }
  } else {
    std::vector<Arm> labels(vd.arm_count(Arm::Treatment), Arm::Treatment);
    labels.insert(labels.end(), vd.arm_count(Arm::Control), Arm::Control);
    std::shuffle(labels.begin(), labels.end(), arm_eng);
    for (std::size_t j = 0; j < labels.size(); ++j) c.records[j].arm = labels[j];
  }

  const bool binary = d.endpoint.is_binary();
  std::normal_distribution<double> noise(0.0, 1.0);
  for (auto& r : c.records) {
    const auto& sg = d.subgroups[r.subgroup_index];
    const bool treated = r.arm == Arm::Treatment;
    if (binary) {
      std::bernoulli_distribution resp(treated ? sg.treatment_effect : sg.control_param);
      r.outcome = resp(outcome_eng) ? 1.0 : 0.0;
    } else {
      double y = sg.control_param + (treated ? sg.treatment_effect : 0.0) + c.site_effects[r.site_index];
      if (d.endpoint.residual_sd > 0.0) y += d.endpoint.residual_sd * noise(outcome_eng);
      r.outcome = y;
    }
  }
  return c;
}

IASelection select_ia_subset(const Cohort& cohort, const ShiftSpec& shift, std::uint64_t stream) {
  const ValidatedDesign& vd = cohort.design;
  validate_shift(vd, shift);
  const int K = vd.num_subgroups();
  const auto quota = largest_remainder(shift.ia_subgroup_proportions, vd.ia_size());

  // cells[k][arm] -> ids
  std::vector<std::array<std::vector<int>, 2>> cells(static_cast<std::size_t>(K));
  for (const auto& r : cohort.records) cells[r.subgroup_index][static_cast<int>(r.arm)].push_back(r.id);

  Engine eng(child_seed(cohort.seed, StreamTag::IaSelection, stream));
  IASelection sel;
  sel.target_proportions = shift;
  sel.ia_ids.reserve(static_cast<std::size_t>(vd.ia_size()));
  for (int k = 0; k < K; ++k) {
    const int supply = static_cast<int>(cells[k][0].size() + cells[k][1].size());
    if (quota[k] > supply) {
      throw Error(ErrorCode::QuotaInfeasible,
                  "IA quota " + std::to_string(quota[k]) + " exceeds the " + std::to_string(supply) +
                      " cohort members of subgroup " + std::to_string(k));
    }
    if (quota[k] == 0) continue;
    const std::array<double, 2> share{static_cast<double>(cells[k][0].size()) / supply,
                                      static_cast<double>(cells[k][1].size()) / supply};
    const auto per_arm = largest_remainder(share, quota[k]);
    for (int a = 0; a < 2; ++a) {
      auto& pool = cells[k][a];
      partial_shuffle(pool, static_cast<std::size_t>(per_arm[a]), eng);
      sel.ia_ids.insert(sel.ia_ids.end(), pool.begin(), pool.begin() + per_arm[a]);
    }
  }
  std::sort(sel.ia_ids.begin(), sel.ia_ids.end());
  return sel;
}

BaselineSet select_baseline_available(const Cohort& cohort, const IASelection& ia, double fraction,
                                      std::uint64_t seed, BaselineRemainder mode) {
  const int n = cohort.design.total_n();
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "baseline fraction must lie in (0, 1]");
  }
  const int target = static_cast<int>(std::lround(fraction * n));
  const int n_ia = static_cast<int>(ia.ia_ids.size());
  if (target < n_ia) {
    throw Error(ErrorCode::FractionTooSmall,
                "baseline set of " + std::to_string(target) + " cannot contain the " +
                    std::to_string(n_ia) + " IA patients");
  }

  std::vector<char> is_ia(static_cast<std::size_t>(n), 0);
  for (int id : ia.ia_ids) is_ia[id] = 1;

  Engine eng(child_seed(seed, StreamTag::Baseline, 0));
  BaselineSet out;
  out.fraction = fraction;
  out.available_ids = ia.ia_ids;
  const int extra = target - n_ia;

  if (mode == BaselineRemainder::FinitePopulation) {
    std::vector<int> rest;
    rest.reserve(static_cast<std::size_t>(n - n_ia));
    for (int i = 0; i < n; ++i) {
      if (!is_ia[i]) rest.push_back(i);
    }
    partial_shuffle(rest, static_cast<std::size_t>(extra), eng);
    out.available_ids.insert(out.available_ids.end(), rest.begin(), rest.begin() + extra);
  } else {
    const int K = cohort.design.num_subgroups();
    std::vector<std::vector<int>> rest(static_cast<std::size_t>(K));
    for (const auto& r : cohort.records) {
      if (!is_ia[r.id]) rest[r.subgroup_index].push_back(r.id);
    }
    for (auto& pool : rest) std::shuffle(pool.begin(), pool.end(), eng);
    std::vector<std::size_t> used(static_cast<std::size_t>(K), 0);
    const auto props = cohort.design.proportions();
    std::discrete_distribution<int> pick(props.begin(), props.end());
    for (int i = 0; i < extra; ++i) {
      int k = pick(eng);
      // An exhausted subgroup hands the draw to the next one that still has members.
      for (int step = 0; used[k] >= rest[k].size() && step < K; ++step) k = (k + 1) % K;
      out.available_ids.push_back(rest[k][used[k]++]);
    }
  }
  std::sort(out.available_ids.begin(), out.available_ids.end());
  return out;
}

std::vector<PatientRecord> gather(const Cohort& cohort, std::span<const int> ids) {
  std::vector<PatientRecord> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(cohort.records.at(static_cast<std::size_t>(id)));
  return out;
}

std::vector<PatientRecord> flagged_records(const Cohort& cohort, const IASelection& ia,
                                           const BaselineSet* baseline) {
  auto out = cohort.records;
  for (int id : ia.ia_ids) {
    out[id].in_ia = true;
    out[id].baseline_available = true;
  }
  if (baseline) {
    for (int id : baseline->available_ids) out[id].baseline_available = true;
  }
  return out;
}

void write_cohort_csv(std::ostream& os, std::span<const PatientRecord> records) {
  os << "id,subgroup,site,arm,outcome,in_ia,baseline_available\n";
  for (const auto& r : records) {
    os << r.id << ',' << r.subgroup_index << ',' << r.site_index << ',' << to_string(r.arm) << ','
       << format_double(r.outcome) << ',' << (r.in_ia ? 1 : 0) << ','
       << (r.baseline_available ? 1 : 0) << '\n';
  }
}

}  // namespace futilsim
