#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "../support/oracles.hpp"
#include "fixtures.hpp"
#include "futilsim/datagen.hpp"
#include "futilsim/error.hpp"
#include "futilsim/util.hpp"

using namespace futilsim;

namespace {

std::vector<int> subgroup_counts(const Cohort& c, std::span<const int> ids) {
  std::vector<int> n(static_cast<std::size_t>(c.design.num_subgroups()), 0);
  for (int id : ids) ++n[static_cast<std::size_t>(c.records[static_cast<std::size_t>(id)].subgroup_index)];
  return n;
}

}  // namespace

TEST_SUITE("datagen") {

TEST_CASE("cohort respects quotas and is deterministic") {
  const auto vd = validate_design(fx::two_subgroup_binary());
  const auto a = generate_cohort(vd, 42);
  const auto b = generate_cohort(vd, 42);
  CHECK(a == b);
  CHECK(a.records.size() == 300);
  std::vector<std::array<int, 2>> cell(2, {0, 0});
  for (const auto& r : a.records) {
    ++cell[r.subgroup_index][static_cast<int>(r.arm)];
    CHECK((r.outcome == 0.0 || r.outcome == 1.0));
  }
  CHECK(cell == vd.subgroup_arm_counts());
  CHECK(generate_cohort(vd, 43).records != a.records);

  std::ostringstream s1, s2;
  write_cohort_csv(s1, a.records);
  write_cohort_csv(s2, b.records);
  CHECK(s1.str() == s2.str());
  CHECK(s1.str().rfind("id,subgroup,site,arm,outcome,in_ia,baseline_available\n", 0) == 0);
}

TEST_CASE("noise-free continuous cohort reproduces the subgroup baselines") {
  auto d = continuous_trial_design();
  d.sites.effect_sd = 0.0;
  d.endpoint.residual_sd = 0.0;
  const auto c = generate_cohort(validate_design(d), 9);
  for (double s : c.site_effects) CHECK(s == 0.0);
  for (const auto& r : c.records) {
    if (r.arm == Arm::Control && r.subgroup_index == 0) CHECK(r.outcome == 40.0);
    if (r.arm == Arm::Treatment && r.subgroup_index == 1) CHECK(r.outcome == 23.0);
  }
}

TEST_CASE("mean treated response is 0.5 across cohorts") {
  const auto vd = validate_design(fx::two_subgroup_binary());
  std::vector<double> m;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const auto c = generate_cohort(vd, s);
    double sum = 0.0;
    for (const auto& r : c.records)
      if (r.arm == Arm::Treatment) sum += r.outcome;
    m.push_back(sum / 150.0);
  }
  const double se = std::sqrt(sample_variance(m) / m.size());
  CHECK(std::abs(mean(m) - 0.5) < 3 * se);
}

TEST_CASE("complete randomization keeps arm totals") {
  auto d = continuous_trial_design();
  const auto c = generate_cohort(validate_design(d), 3);
  int t = 0;
  for (const auto& r : c.records) t += r.arm == Arm::Treatment;
  CHECK(t == 300);
}

TEST_CASE("IA subsets realise the requested composition") {
  const auto vd = validate_design(fx::two_subgroup_binary());
  const auto c = generate_cohort(vd, 5);
  const auto ia = select_ia_subset(c, ShiftSpec{{0.7, 0.3}});
  CHECK(ia.ia_ids.size() == 120);
  CHECK(subgroup_counts(c, ia.ia_ids) == std::vector<int>{84, 36});
  CHECK(std::is_sorted(ia.ia_ids.begin(), ia.ia_ids.end()));

  CHECK(subgroup_counts(c, select_ia_subset(c, ShiftSpec{{0.6, 0.4}}).ia_ids) == std::vector<int>{72, 48});
  CHECK(subgroup_counts(c, select_ia_subset(c, ShiftSpec{{1.0, 0.0}}).ia_ids) == std::vector<int>{120, 0});

  // arm balance within each subgroup is preserved
  int t = 0;
  for (int id : ia.ia_ids) t += c.records[id].arm == Arm::Treatment;
  CHECK(t == 60);

  CHECK(select_ia_subset(c, ShiftSpec{{0.7, 0.3}}, 0).ia_ids == ia.ia_ids);
  CHECK(select_ia_subset(c, ShiftSpec{{0.7, 0.3}}, 1).ia_ids != ia.ia_ids);
}

TEST_CASE("infeasible IA quota") {
  auto d = fx::two_subgroup_binary();
  d.ia_fraction = 0.8;
  const auto c = generate_cohort(validate_design(d), 1);
  try {
    select_ia_subset(c, ShiftSpec{{0.0, 1.0}});
    FAIL("expected QuotaInfeasible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::QuotaInfeasible);
  }
}

TEST_CASE("baseline availability sets") {
  const auto vd = validate_design(fx::two_subgroup_binary());
  const auto c = generate_cohort(vd, 11);
  const auto ia = select_ia_subset(c, ShiftSpec{{0.7, 0.3}});

  const auto full = select_baseline_available(c, ia, 1.0, 1);
  CHECK(full.available_ids.size() == 300);
  CHECK(subgroup_counts(c, full.available_ids) == std::vector<int>{180, 120});

  const auto tight = select_baseline_available(c, ia, 0.4, 1);
  CHECK(tight.available_ids == ia.ia_ids);

  const auto part = select_baseline_available(c, ia, 0.6, 1);
  CHECK(part.available_ids.size() == 180);
  CHECK(std::includes(part.available_ids.begin(), part.available_ids.end(), ia.ia_ids.begin(), ia.ia_ids.end()));
  CHECK(select_baseline_available(c, ia, 0.6, 1).available_ids == part.available_ids);

  try {
    select_baseline_available(c, ia, 0.3, 1);
    FAIL("expected FractionTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FractionTooSmall);
  }

  const auto flagged = flagged_records(c, ia, &part);
  for (const auto& r : flagged) {
    if (r.in_ia) CHECK(r.baseline_available);
  }
}

TEST_CASE("available-set composition matches hypergeometric enumeration") {
  // IA (84, 36) from a 300-patient cohort; 60 more drawn from the 180
  // non-IA patients, 96 of whom are subgroup 1.
  double expected_extra = 0.0;
  for (int k = 0; k <= 60; ++k) expected_extra += k * oracle::hypergeom_pmf(k, 180, 96, 60);
  const double expected_share = (84.0 + expected_extra) / 180.0;
  CHECK(expected_share == doctest::Approx((84.0 + 32.0) / 180.0).epsilon(1e-9));
  CHECK(expected_share > 0.6);
  CHECK(expected_share < 0.7);

  const auto vd = validate_design(fx::two_subgroup_binary());
  std::vector<double> share;
  for (std::uint64_t s = 0; s < 600; ++s) {
    const auto c = generate_cohort(vd, s);
    const auto ia = select_ia_subset(c, ShiftSpec{{0.7, 0.3}});
    const auto b = select_baseline_available(c, ia, 0.6, s + 1000);
    share.push_back(subgroup_counts(c, b.available_ids)[0] / 180.0);
  }
  const double se = std::sqrt(sample_variance(share) / share.size());
  CHECK(std::abs(mean(share) - expected_share) < 3 * se);
}

TEST_CASE("over-sampled share falls as more baseline data becomes available") {
  const auto vd = validate_design(fx::two_subgroup_binary());
  const std::vector<double> fractions{0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> avg(fractions.size(), 0.0);
  const int seeds = 500;
  for (int s = 0; s < seeds; ++s) {
    const auto c = generate_cohort(vd, static_cast<std::uint64_t>(s));
    const auto ia = select_ia_subset(c, ShiftSpec{{0.7, 0.3}});
    for (std::size_t f = 0; f < fractions.size(); ++f) {
      const auto b = select_baseline_available(c, ia, fractions[f], static_cast<std::uint64_t>(s) + 5000);
      avg[f] += subgroup_counts(c, b.available_ids)[0] / static_cast<double>(b.available_ids.size()) / seeds;
    }
  }
  for (std::size_t f = 1; f < fractions.size(); ++f) CHECK(avg[f] <= avg[f - 1] + 1e-12);
  CHECK(avg.back() == doctest::Approx(0.6));
}

TEST_CASE("finite-population conservation for any shift") {
  const auto vd = validate_design(fx::two_subgroup_binary());
  const auto c = generate_cohort(vd, 21);
  for (double p : {0.5, 0.6, 0.7, 0.8, 1.0}) {
    const auto ia = select_ia_subset(c, ShiftSpec{{p, 1.0 - p}});
    std::vector<int> rest;
    std::set<int> in(ia.ia_ids.begin(), ia.ia_ids.end());
    for (int i = 0; i < 300; ++i)
      if (!in.count(i)) rest.push_back(i);
    const auto a = subgroup_counts(c, ia.ia_ids), b = subgroup_counts(c, rest);
    CHECK(a[0] + b[0] == 180);
    CHECK(a[1] + b[1] == 120);
  }
}

TEST_CASE("design-distribution remainder mode") {
  const auto vd = validate_design(fx::two_subgroup_binary());
  const auto c = generate_cohort(vd, 4);
  const auto ia = select_ia_subset(c, ShiftSpec{{0.7, 0.3}});
  const auto b = select_baseline_available(c, ia, 0.6, 8, BaselineRemainder::DesignDistribution);
  CHECK(b.available_ids.size() == 180);
  CHECK(std::includes(b.available_ids.begin(), b.available_ids.end(), ia.ia_ids.begin(), ia.ia_ids.end()));
}

}  // TEST_SUITE
