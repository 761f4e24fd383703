#include "futilsim/figures.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "futilsim/error.hpp"
#include "futilsim/estimators.hpp"
#include "futilsim/rng.hpp"
#include "futilsim/util.hpp"

namespace futilsim {

using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kFigureNames[] = {"fig1", "fig2", "fig5", "fig6", "fig7", "fig8", "fig9"};

NamedEstimator unadjusted() { return {"unadjusted", {EstimatorKind::Unadjusted, {}, 10, {}}}; }

NamedEstimator naive(ProportionSourceKind source = ProportionSourceKind::DesignTruth) {
  return {"naive_post_strat", {EstimatorKind::NaivePostStrat, {}, 10, {source, false}}};
}

ModelSpec misspecified_lmm() { return {ModelKind::RandomInterceptLmm, false}; }

std::vector<ShiftSpec> subgroup_one_grid(std::initializer_list<double> p1) {
  std::vector<ShiftSpec> out;
  for (double p : p1) out.push_back(ShiftSpec{{p, 1.0 - p}});
  return out;
}

ScenarioConfig binary_base() {
  ScenarioConfig c;
  c.design = binary_trial_design();
  c.rules = {{"posterior_prob", FutilityRuleSpec{}}};
  return c;
}

ScenarioConfig continuous_base() {
  ScenarioConfig c;
  c.design = continuous_trial_design();
  c.shift_grid = subgroup_one_grid({0.6, 0.5});
  c.stratifier = Stratification::Kind::SubgroupBySite;
  c.replicates = 1000;
  return c;
}

std::filesystem::path prepare(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create '" + dir.string() + "': " + ec.message());
  return dir;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::IoError, "cannot write '" + p.string() + "'");
  os << text;
  os.close();
  if (!os) throw Error(ErrorCode::IoError, "failed writing '" + p.string() + "'");
}

ojson sidecar(FigureId id, const ScenarioConfig& c) {
  ojson j;
  j["figure"] = to_string(id);
  j["version"] = kVersion;
  j["master_seed"] = c.master_seed;
  j["replicates"] = c.replicates;
  j["config_hash"] = std::to_string(config_hash(c));
  j["config"] = ojson::parse(to_json(c, -1));
  return j;
}


ojson finite(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

std::vector<std::filesystem::path> finish(const std::filesystem::path& dir, FigureId id, const std::string& csv,
                                          const ojson& meta) {
  const auto base = dir / to_string(id);
  const auto csv_path = std::filesystem::path(base.string() + ".csv");
  const auto json_path = std::filesystem::path(base.string() + ".json");
  write_text(csv_path, csv);
  write_text(json_path, meta.dump(2) + "\n");
  return {csv_path, json_path};
}

std::string pct(double v) { return format_double(100.0 * v); }

// Stop-probability curves over the subgroup-1 grid (figures 1 and 2).
std::vector<std::filesystem::path> stop_curves(FigureId id, const ScenarioConfig& c, const ReproduceOptions& opt,
                                               const std::filesystem::path& dir) {
  const auto res = run_scenario(c, opt.run);
  const double p0 = c.design.subgroups[0].population_proportion;
  std::string csv = "shift_pct,method,stop_prob,rel_change_pct,mc_se\n";
  ojson summary = ojson::array();
  for (std::size_t e = 0; e < c.estimators.size(); ++e) {
    for (std::size_t s = 0; s < c.shift_grid.size(); ++s) {
      const auto& a = res.aggregate(static_cast<int>(s), 0, static_cast<int>(e), 0);
      const double shift_pct = 100.0 * (c.shift_grid[s].ia_subgroup_proportions[0] - p0) / p0;
      csv += format_double(shift_pct) + ',' + c.estimators[e].name + ',' + format_double(a.stops->stop_probability) +
             ',' + pct(a.relative_change) + ',' + format_double(a.stops->mc_standard_error) + '\n';
      summary.push_back({{"shift_pct", shift_pct},
                         {"method", c.estimators[e].name},
                         {"stop_prob", a.stops->stop_probability},
                         {"n_errors", a.n_errors}});
    }
  }
  auto meta = sidecar(id, c);
  meta["shift_grid_note"] = "subgroup-1 IA proportion relative to the planned 60%";
  meta["errors"] = res.n_errors;
  meta["summary"] = summary;
  return finish(dir, id, csv, meta);
}

std::string long_format(const std::vector<std::pair<std::string, std::vector<double>>>& samples) {
  std::string csv = "method,replicate,estimate\n";
  for (const auto& [name, xs] : samples) {
    for (std::size_t r = 0; r < xs.size(); ++r) csv += name + ',' + std::to_string(r) + ',' + format_double(xs[r]) + '\n';
  }
  return csv;
}

ojson sample_summary(const std::vector<std::pair<std::string, std::vector<double>>>& samples) {
  ojson out = ojson::object();
  for (const auto& [name, xs] : samples) {
    out[name] = {{"n", xs.size()}, {"mean", finite(xs.empty() ? NAN : mean(xs))}, {"variance", finite(sample_variance(xs))}};
  }
  return out;
}

}  // namespace

FigureId parse_figure_id(const std::string& s) {
  for (std::size_t i = 0; i < std::size(kFigureNames); ++i) {
    if (s == kFigureNames[i]) return static_cast<FigureId>(i);
  }
  throw Error(ErrorCode::ConfigError, "unknown figure '" + s + "' (expected fig1, fig2, fig5, fig6, fig7, fig8 or fig9)");
}

std::string to_string(FigureId id) { return kFigureNames[static_cast<int>(id)]; }

TrialDesign binary_trial_design() {
  TrialDesign d;
  d.total_n = 300;
  d.endpoint = Endpoint::binary();
  d.subgroups = {{"S1", 0.6, 0.30, 0.40}, {"S2", 0.4, 0.30, 0.65}};
  d.ia_fraction = 0.4;
  return d;
}

TrialDesign continuous_trial_design() {
  TrialDesign d;
  d.total_n = 600;
  d.endpoint = Endpoint::continuous(5.0);
  d.subgroups = {{"S1", 0.6, 40.0, 7.0}, {"S2", 0.4, 20.0, 3.0}};
  d.sites = {4, 2.5};
  d.ia_fraction = 0.4;
  d.randomization = Randomization::Complete;
  return d;
}

std::vector<int> figure_cutoff_grid() { return {0, 2, 5, 10, 20, 50, 100}; }

ScenarioConfig figure_config(FigureId id) {
  ScenarioConfig c;
  switch (id) {
    case FigureId::Fig1:
    case FigureId::Fig2: {
      c = binary_base();
      c.shift_grid = subgroup_one_grid({0.55, 0.6, 0.65, 0.7, 0.75});
      c.estimators = {unadjusted(), naive()};
      c.replicates = 1000;
      if (id == FigureId::Fig2) {
        FutilityRuleSpec pp;
        pp.kind = RuleKind::PredictiveProb;
        c.rules = {{"predictive_prob", pp}};
      }
      break;
    }
    case FigureId::Fig5:
      c = continuous_base();
      c.estimators = {unadjusted(), naive(), {"model_based_post_strat", {EstimatorKind::ModelBasedPostStrat, misspecified_lmm(), 10, {}}}};
      break;
    case FigureId::Fig6:
    case FigureId::Fig7:
      c = continuous_base();
      c.estimators = {unadjusted(), naive(),
                      {"model_based_post_strat", {EstimatorKind::ModelBasedPostStrat, misspecified_lmm(), 10, {}}},
                      {"hybrid_post_strat", {EstimatorKind::HybridPostStrat, misspecified_lmm(), 10, {}}}};
      break;
    case FigureId::Fig8:
    case FigureId::Fig9:
      c = binary_base();
      c.shift_grid = subgroup_one_grid({0.6, 0.7});
      c.estimators = {unadjusted(), naive(ProportionSourceKind::EstimatedFromBaseline)};
      c.baseline_fraction_grid = {0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95};
      c.replicates = 10000;
      break;
  }
  c.master_seed = hash_name(to_string(id == FigureId::Fig7 ? FigureId::Fig6 : id == FigureId::Fig9 ? FigureId::Fig8 : id));
  return c;
}

std::vector<std::filesystem::path> reproduce_figure(FigureId id, const std::filesystem::path& out_dir,
                                                    const ReproduceOptions& options) {
  prepare(out_dir);
  auto c = figure_config(id);
  if (options.replicates) c.replicates = *options.replicates;

  switch (id) {
    case FigureId::Fig1:
    case FigureId::Fig2:
      return stop_curves(id, c, options, out_dir);

    case FigureId::Fig5: {
      const auto res = run_scenario(c, options.run);
      const std::vector<std::pair<std::string, std::vector<double>>> samples{
          {"benchmark", res.effects(0, 0, 0)},
          {"unadjusted", res.effects(1, 0, 0)},
          {"naive_post_strat", res.effects(1, 0, 1)},
          {"model_based_post_strat", res.effects(1, 0, 2)}};
      auto meta = sidecar(id, c);
      meta["true_effect"] = true_effect(c.design);
      meta["errors"] = res.n_errors;
      meta["summary"] = sample_summary(samples);
      return finish(out_dir, id, long_format(samples), meta);
    }

    case FigureId::Fig6: {
      const auto curve = tune_hybrid_cutoff(c, figure_cutoff_grid(), options.run);
      std::string csv = "cutoff,distance,argmin\n";
      for (std::size_t i = 0; i < curve.cutoffs.size(); ++i) {
        csv += std::to_string(curve.cutoffs[i]) + ',' + format_double(curve.distances[i]) + ',' +
               std::to_string(curve.argmin) + '\n';
      }
      auto meta = sidecar(id, c);
      meta["cutoffs"] = curve.cutoffs;
      meta["distances"] = curve.distances;
      meta["argmin"] = curve.argmin;
      meta["naive_distance"] = curve.naive_distance;
      meta["model_distance"] = curve.model_distance;
      meta["argmin_bootstrap_se"] = curve.argmin_bootstrap_se;
      return finish(out_dir, id, csv, meta);
    }

    case FigureId::Fig7: {
      const auto curve = tune_hybrid_cutoff(c, figure_cutoff_grid(), options.run);
      c.estimators[3].spec.cutoff = curve.argmin;
      const auto res = run_scenario(c, options.run);
      const std::vector<std::pair<std::string, std::vector<double>>> samples{
          {"benchmark", res.effects(0, 0, 0)},
          {"naive_post_strat", res.effects(1, 0, 1)},
          {"model_based_post_strat", res.effects(1, 0, 2)},
          {"hybrid_post_strat", res.effects(1, 0, 3)}};
      auto meta = sidecar(id, c);
      meta["tuned_cutoff"] = curve.argmin;
      meta["errors"] = res.n_errors;
      meta["summary"] = sample_summary(samples);
      ojson w1 = ojson::object();
      for (std::size_t i = 1; i < samples.size(); ++i) {
        w1[samples[i].first] = wasserstein_l1(samples[i].second, samples[0].second);
      }
      meta["wasserstein_to_benchmark"] = w1;
      return finish(out_dir, id, long_format(samples), meta);
    }

    case FigureId::Fig8:
    case FigureId::Fig9: {
      const auto res = run_scenario(c, options.run);
      std::string csv = id == FigureId::Fig8
                            ? "baseline_fraction,stop_prob_benchmark,stop_prob_unadjusted,stop_prob_adjusted,mc_se,"
                              "error_inflation,adjusted_relative_change,correction_fraction\n"
                            : "baseline_fraction,mean_effect_adjusted,mc_se_effect,mean_effect_unadjusted,true_effect\n";
      for (std::size_t f = 0; f < c.baseline_fraction_grid.size(); ++f) {
        const int fi = static_cast<int>(f);
        const auto& bench = res.aggregate(0, fi, 0, 0);
        const auto& unadj = res.aggregate(1, fi, 0, 0);
        const auto& adj = res.aggregate(1, fi, 1, 0);
        csv += format_double(c.baseline_fraction_grid[f]) + ',';
        if (id == FigureId::Fig8) {
          csv += format_double(bench.stops->stop_probability) + ',' + format_double(unadj.stops->stop_probability) + ',' +
                 format_double(adj.stops->stop_probability) + ',' + format_double(adj.stops->mc_standard_error) + ',' +
                 format_double(unadj.relative_change) + ',' + format_double(adj.relative_change) + ',' +
                 format_double(adj.correction_fraction) + '\n';
        } else {
          csv += format_double(adj.mean_effect) + ',' + format_double(adj.mc_se_effect) + ',' +
                 format_double(unadj.mean_effect) + ',' + format_double(true_effect(c.design)) + '\n';
        }
      }
      auto meta = sidecar(id, c);
      meta["errors"] = res.n_errors;
      meta["ia_composition"] = c.shift_grid[1].ia_subgroup_proportions;
      return finish(out_dir, id, csv, meta);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unhandled figure");
}

std::vector<std::filesystem::path> write_shrinkage_curves(const std::filesystem::path& out_dir) {
  prepare(out_dir);
  const double sigma2 = 1.0;
  std::string csv = "panel,tau2,sigma2,n,weight\n";
  const double tau2s[] = {0.05, 0.1, 0.25, 0.5, 1.0, 2.0};
  for (double t : tau2s) {
    for (int n = 1; n <= 100; ++n) {
      csv += "weight_vs_n," + format_double(t) + ',' + format_double(sigma2) + ',' + std::to_string(n) + ',' +
             format_double(shrinkage_weight(t, sigma2, n)) + '\n';
    }
  }
  const int ns[] = {1, 5, 10, 25, 50, 100};
  for (int n : ns) {
    for (int i = 0; i <= 100; ++i) {
      const double t = 0.02 * i;
      csv += "weight_vs_tau2," + format_double(t) + ',' + format_double(sigma2) + ',' + std::to_string(n) + ',' +
             format_double(shrinkage_weight(t, sigma2, n)) + '\n';
    }
  }
  const auto csv_path = out_dir / "shrinkage.csv";
  const auto json_path = out_dir / "shrinkage.json";
  write_text(csv_path, csv);
  ojson meta;
  meta["version"] = kVersion;
  meta["formula"] = "w = tau2 / (tau2 + sigma2 / n)";
  meta["sigma2"] = sigma2;
  meta["weight_vs_n"] = {{"tau2", tau2s}, {"n_range", {1, 100}}};
  meta["weight_vs_tau2"] = {{"n", ns}, {"tau2_range", {0.0, 2.0}}, {"tau2_step", 0.02}};
  write_text(json_path, meta.dump(2) + "\n");
  return {csv_path, json_path};
}

}  // namespace futilsim
