#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>
#include <vector>

#include "futilsim/datagen.hpp"
#include "futilsim/engine.hpp"
#include "futilsim/figures.hpp"
#include "futilsim/futility.hpp"
#include "futilsim/lmm.hpp"
#include "futilsim/metrics.hpp"

using namespace futilsim;

namespace {

void BM_PosteriorProb(benchmark::State& state) {
  const BetaPrior flat;
  const auto t = beta_posterior_from_counts(31, 60, flat);
  const auto c = beta_posterior_from_counts(19, 60, flat);
  double delta = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(posterior_prob_effect_exceeds(t, c, 0.1 + delta));
    delta = delta > 0.2 ? 0.0 : delta + 1e-3;
  }
}
BENCHMARK(BM_PosteriorProb);

void BM_PredictiveProb(benchmark::State& state) {
  FutilityRuleSpec rule;
  rule.kind = RuleKind::PredictiveProb;
  rule.pp_draws = static_cast<int>(state.range(0));
  const PredictiveArm t{{25, 37}, {{13, 36}, {12, 24}}};
  const PredictiveArm c{{19, 43}, {{11, 36}, {8, 24}}};
  const std::vector<double> props{0.6, 0.4};
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(predictive_probability(t, c, {90, 90}, props, rule, seed++));
}
BENCHMARK(BM_PredictiveProb)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Wasserstein(benchmark::State& state) {
  std::mt19937_64 g(3);
  std::normal_distribution<double> z;
  std::vector<double> a(static_cast<std::size_t>(state.range(0))), b(a.size());
  for (auto& x : a) x = z(g);
  for (auto& x : b) x = 0.3 + z(g);
  for (auto _ : state) benchmark::DoNotOptimize(wasserstein_l1(a, b));
}
BENCHMARK(BM_Wasserstein)->Arg(1000)->Arg(10000);

void BM_LmmFit(benchmark::State& state) {
  const auto vd = validate_design(continuous_trial_design());
  const auto cohort = generate_cohort(vd, 11);
  const auto ia = select_ia_subset(cohort, ShiftSpec{{0.5, 0.5}});
  std::vector<PatientRecord> records;
  for (int id : ia.ia_ids) records.push_back(cohort.records[static_cast<std::size_t>(id)]);
  const ModelSpec model{ModelKind::RandomInterceptLmm, false};
  for (auto _ : state) benchmark::DoNotOptimize(fit_random_intercept_lmm(records, model, 2));
}
BENCHMARK(BM_LmmFit)->Unit(benchmark::kMicrosecond);

void BM_ReplicateTask(benchmark::State& state) {
  auto c = figure_config(state.range(0) == 0 ? FigureId::Fig1 : FigureId::Fig6);
  c.replicates = 1;
  c.output.write_rows = false;
  for (auto _ : state) benchmark::DoNotOptimize(run_scenario(c));
}
BENCHMARK(BM_ReplicateTask)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
