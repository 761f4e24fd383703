#include "futilsim/engine.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <thread>

#include <json.hpp>

#include "futilsim/datagen.hpp"
#include "futilsim/error.hpp"
#include "futilsim/futility.hpp"
#include "futilsim/rng.hpp"
#include "futilsim/util.hpp"

namespace futilsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Layout {
  int shifts, fractions, estimators, rules;  // rules >= 1 (a single "none" slot without rules)
  bool has_rules;

  explicit Layout(const ScenarioConfig& c)
      : shifts(static_cast<int>(c.shift_grid.size())),
        fractions(static_cast<int>(c.baseline_fraction_grid.size())),
        estimators(static_cast<int>(c.estimators.size())),
        rules(c.rules.empty() ? 1 : static_cast<int>(c.rules.size())),
        has_rules(!c.rules.empty()) {}

  int per_fraction() const { return estimators * rules; }
  int per_task() const { return fractions * per_fraction(); }
  std::size_t aggregate_index(int s, int f, int e, int k) const {
    return ((static_cast<std::size_t>(s) * fractions + f) * estimators + e) * rules + (k < 0 ? 0 : k);
  }
};

bool same_shift(const ShiftSpec& a, std::span<const double> props) {
  if (a.ia_subgroup_proportions.size() != props.size()) return false;
  for (std::size_t i = 0; i < props.size(); ++i) {
    if (std::abs(a.ia_subgroup_proportions[i] - props[i]) > kSimplexTolerance) return false;
  }
  return true;
}

std::optional<int> find_benchmark(const ScenarioConfig& c, const ValidatedDesign& vd) {
  const auto props = vd.proportions();
  for (std::size_t s = 0; s < c.shift_grid.size(); ++s) {
    if (same_shift(c.shift_grid[s], props)) return static_cast<int>(s);
  }
  return std::nullopt;
}

std::optional<int> find_reference(const ScenarioConfig& c) {
  for (std::size_t e = 0; e < c.estimators.size(); ++e) {
    if (c.estimators[e].spec.kind == EstimatorKind::Unadjusted) return static_cast<int>(e);
  }
  return std::nullopt;
}

struct TaskContext {
  const ScenarioConfig& config;
  const ValidatedDesign& design;
  const Layout& layout;
  Stratification strata;
  std::vector<double> design_cell_props;
};

struct Interim {
  std::array<int, 2> n{};  // IA patients per arm
  std::array<std::vector<StratumCount>, 2> subgroup_counts;
};

Interim summarize_interim(std::span<const PatientRecord> ia, int num_subgroups) {
  Interim out;
  for (auto& v : out.subgroup_counts) v.assign(static_cast<std::size_t>(num_subgroups), StratumCount{});
  for (const auto& r : ia) {
    const int a = static_cast<int>(r.arm);
    ++out.n[a];
    auto& c = out.subgroup_counts[a][r.subgroup_index];
    ++c.n;
    c.successes += r.outcome;
  }
  return out;
}

Decision apply_rule(const EffectEstimate& est, const FutilityRuleSpec& rule, const Interim& interim,
                    const ValidatedDesign& vd, std::uint64_t seed) {
  const int t = static_cast<int>(Arm::Treatment);
  const int c = static_cast<int>(Arm::Control);
  if (rule.kind == RuleKind::PosteriorProb) {
    return evaluate_posterior_rule({est.per_arm_means[t], static_cast<double>(interim.n[t])},
                                   {est.per_arm_means[c], static_cast<double>(interim.n[c])}, rule);
  }
  const PredictiveArm treat{beta_posterior(est.per_arm_means[t], interim.n[t], rule.prior), interim.subgroup_counts[t]};
  const PredictiveArm ctrl{beta_posterior(est.per_arm_means[c], interim.n[c], rule.prior), interim.subgroup_counts[c]};
  const std::array<int, 2> remaining{vd.arm_count(Arm::Treatment) - interim.n[t], vd.arm_count(Arm::Control) - interim.n[c]};
  const auto props = vd.proportions();
  return predictive_probability(treat, ctrl, remaining, props, rule, seed);
}

void fail_row(ResultRow& row, const std::string& what) {
  row.effect = row.treat_mean = row.ctrl_mean = row.statistic = kNaN;
  row.stop = -1;
  row.error = what;
}

// Rows for every fraction, estimator and rule of one (shift, replicate) task.
std::vector<ResultRow> run_task(const TaskContext& ctx, int s, int r) {
  const auto& cfg = ctx.config;
  const auto& L = ctx.layout;
  std::vector<ResultRow> rows(static_cast<std::size_t>(L.per_task()));
  for (int f = 0; f < L.fractions; ++f) {
    for (int e = 0; e < L.estimators; ++e) {
      for (int k = 0; k < L.rules; ++k) {
        auto& row = rows[static_cast<std::size_t>((f * L.estimators + e) * L.rules + k)];
        row.replicate = r;
        row.shift_index = s;
        row.fraction_index = f;
        row.estimator_index = e;
        row.rule_index = L.has_rules ? k : -1;
        row.statistic = kNaN;
      }
    }
  }
  auto row_at = [&](int f, int e, int k) -> ResultRow& {
    return rows[static_cast<std::size_t>((f * L.estimators + e) * L.rules + k)];
  };

  const std::uint64_t seed = child_seed(child_seed(cfg.master_seed, StreamTag::Cell, static_cast<std::uint64_t>(s)),
                                        StreamTag::Replicate, static_cast<std::uint64_t>(r));
  Cohort cohort;
  IASelection ia;
  std::vector<PatientRecord> ia_records;
  try {
    cohort = generate_cohort(ctx.design, child_seed(seed, StreamTag::Cohort, 0));
    ia = select_ia_subset(cohort, cfg.shift_grid[static_cast<std::size_t>(s)], 0);
    ia_records = gather(cohort, ia.ia_ids);
  } catch (const Error& err) {
    for (auto& row : rows) fail_row(row, err.what());
    return rows;
  }
  const Interim interim = summarize_interim(ia_records, ctx.design.num_subgroups());
  const EstimationContext ectx{ctx.strata, cfg.design.endpoint.kind};

  auto fill = [&](int f, int e, const Proportions& props, std::uint64_t pp_stream) {
    const auto& spec = cfg.estimators[static_cast<std::size_t>(e)].spec;
    EffectEstimate est;
    try {
      est = estimate_treatment_effect(ia_records, spec, props, ectx);
    } catch (const Error& err) {
      for (int k = 0; k < L.rules; ++k) fail_row(row_at(f, e, k), err.what());
      return;
    }
    for (int k = 0; k < L.rules; ++k) {
      auto& row = row_at(f, e, k);
      row.effect = est.value;
      row.treat_mean = est.per_arm_means[static_cast<int>(Arm::Treatment)];
      row.ctrl_mean = est.per_arm_means[static_cast<int>(Arm::Control)];
      if (!L.has_rules) continue;
      try {
        const std::uint64_t pp_seed =
            child_seed(child_seed(seed, StreamTag::Predictive, pp_stream), static_cast<std::uint64_t>(e),
                       static_cast<std::uint64_t>(k));
        const auto d = apply_rule(est, cfg.rules[static_cast<std::size_t>(k)].spec, interim, ctx.design, pp_seed);
        row.statistic = d.statistic;
        row.stop = d.stop_for_futility ? 1 : 0;
      } catch (const Error& err) {
        fail_row(row, err.what());
      }
    }
  };

  // Estimators that use the design proportions do not depend on the
  // baseline fraction: compute them once and copy.
  bool any_estimated = false;
  const auto design_props = Proportions::design_truth(ctx.design_cell_props);
  for (int e = 0; e < L.estimators; ++e) {
    if (cfg.estimators[static_cast<std::size_t>(e)].spec.proportion_source.kind ==
        ProportionSourceKind::EstimatedFromBaseline) {
      any_estimated = true;
      continue;
    }
    fill(0, e, design_props, 0);
    for (int f = 1; f < L.fractions; ++f) {
      for (int k = 0; k < L.rules; ++k) {
        auto copy = row_at(0, e, k);
        copy.fraction_index = f;
        row_at(f, e, k) = std::move(copy);
      }
    }
  }
  if (!any_estimated) return rows;

  const std::uint64_t baseline_seed = child_seed(seed, StreamTag::Baseline, 0);
  for (int f = 0; f < L.fractions; ++f) {
    std::vector<PatientRecord> baseline_records;
    std::string baseline_error;
    try {
      const auto bs = select_baseline_available(cohort, ia, cfg.baseline_fraction_grid[static_cast<std::size_t>(f)],
                                                baseline_seed, cfg.baseline_remainder);
      baseline_records = gather(cohort, bs.available_ids);
    } catch (const Error& err) {
      baseline_error = err.what();
    }
    for (int e = 0; e < L.estimators; ++e) {
      const auto& spec = cfg.estimators[static_cast<std::size_t>(e)].spec;
      if (spec.proportion_source.kind != ProportionSourceKind::EstimatedFromBaseline) continue;
      if (!baseline_error.empty()) {
        for (int k = 0; k < L.rules; ++k) fail_row(row_at(f, e, k), baseline_error);
        continue;
      }
      Proportions props;
      try {
        props = estimate_stratum_proportions(baseline_records, ctx.strata, spec.proportion_source.fallback_to_design,
                                             ctx.design_cell_props);
      } catch (const Error& err) {
        for (int k = 0; k < L.rules; ++k) fail_row(row_at(f, e, k), err.what());
        continue;
      }
      fill(f, e, props, static_cast<std::uint64_t>(f) + 1);
    }
  }
  return rows;
}

std::string shift_text(const ShiftSpec& s) {
  std::string out;
  for (std::size_t i = 0; i < s.ia_subgroup_proportions.size(); ++i) {
    if (i) out += ';';
    out += format_double(s.ia_subgroup_proportions[i]);
  }
  return out;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

void open_or_throw(std::ofstream& os, const std::filesystem::path& p) {
  os.open(p, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::IoError, "cannot write '" + p.string() + "'");
}

void close_or_throw(std::ofstream& os, const std::filesystem::path& p) {
  os.close();
  if (!os) throw Error(ErrorCode::IoError, "failed writing '" + p.string() + "'");
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

int default_workers() {
  if (const char* env = std::getenv("FUTILSIM_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 4096) return static_cast<int>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

const AggregateRow& ScenarioResult::aggregate(int shift, int fraction, int estimator, int rule) const {
  const Layout L(config);
  const auto i = L.aggregate_index(shift, fraction, estimator, rule);
  if (i >= aggregates.size()) throw Error(ErrorCode::InvalidArgument, "aggregate index out of range");
  return aggregates[i];
}

std::vector<double> ScenarioResult::effects(int shift, int fraction, int estimator, int rule) const {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.shift_index == shift && r.fraction_index == fraction && r.estimator_index == estimator &&
        (r.rule_index == rule || (rule < 0 && r.rule_index <= 0)) && r.error.empty()) {
      out.push_back(r.effect);
    }
  }
  return out;
}

std::vector<AggregateRow> aggregate_rows(const ScenarioConfig& config, const std::vector<ResultRow>& rows,
                                         std::optional<int> benchmark_shift, std::optional<int> reference_estimator) {
  const Layout L(config);
  std::vector<AggregateRow> aggs(static_cast<std::size_t>(L.shifts) * L.fractions * L.estimators * L.rules);
  std::vector<std::vector<double>> effects(aggs.size());
  std::vector<int> stops(aggs.size(), 0);
  for (int s = 0; s < L.shifts; ++s) {
    for (int f = 0; f < L.fractions; ++f) {
      for (int e = 0; e < L.estimators; ++e) {
        for (int k = 0; k < L.rules; ++k) {
          auto& a = aggs[L.aggregate_index(s, f, e, k)];
          a.shift_index = s;
          a.fraction_index = f;
          a.estimator_index = e;
          a.rule_index = L.has_rules ? k : -1;
        }
      }
    }
  }
  for (const auto& r : rows) {
    const auto i = L.aggregate_index(r.shift_index, r.fraction_index, r.estimator_index, r.rule_index);
    if (!r.error.empty()) {
      ++aggs[i].n_errors;
      continue;
    }
    ++aggs[i].n_ok;
    effects[i].push_back(r.effect);
    if (r.stop == 1) ++stops[i];
  }
  for (std::size_t i = 0; i < aggs.size(); ++i) {
    auto& a = aggs[i];
    if (a.n_ok == 0) {
      a.mean_effect = a.var_effect = a.mc_se_effect = kNaN;
    } else {
      a.mean_effect = mean(effects[i]);
      a.var_effect = sample_variance(effects[i]);
      a.mc_se_effect = std::sqrt(a.var_effect / a.n_ok);
    }
    if (L.has_rules && a.n_ok > 0) a.stops = stop_summary(stops[i], a.n_ok);
  }
  for (auto& a : aggs) {
    a.relative_change = kNaN;
    a.correction_fraction = kNaN;
    if (!a.stops || !benchmark_shift || !reference_estimator) continue;
    const auto& bench = aggs[L.aggregate_index(*benchmark_shift, a.fraction_index, *reference_estimator, a.rule_index)];
    const auto& shifted = aggs[L.aggregate_index(a.shift_index, a.fraction_index, *reference_estimator, a.rule_index)];
    if (!bench.stops || !shifted.stops) continue;
    const double pb = bench.stops->stop_probability;
    const double ps = shifted.stops->stop_probability;
    if (pb > 0.0) a.relative_change = relative_change(a.stops->stop_probability, pb);
    if (ps != pb) a.correction_fraction = correction_fraction(ps, a.stops->stop_probability, pb);
  }
  return aggs;
}

ScenarioResult run_scenario(const ScenarioConfig& config, const RunOptions& options) {
  const ValidatedDesign vd = validate_config(config);
  const Layout L(config);
  TaskContext ctx{config, vd, L, {}, {}};
  ctx.strata = config.stratifier == Stratification::Kind::Subgroup
                   ? Stratification::by_subgroup(vd.num_subgroups())
                   : Stratification::by_subgroup_and_site(vd.num_subgroups(), vd.num_sites());
  ctx.design_cell_props = ctx.strata.expand(vd.proportions());

  const std::size_t n_tasks = static_cast<std::size_t>(L.shifts) * static_cast<std::size_t>(config.replicates);
  std::vector<std::vector<ResultRow>> task_rows(n_tasks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= n_tasks || failed.load()) return;
      try {
        const int s = static_cast<int>(t / static_cast<std::size_t>(config.replicates));
        const int r = static_cast<int>(t % static_cast<std::size_t>(config.replicates));
        task_rows[t] = run_task(ctx, s, r);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };
  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(n_tasks)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  ScenarioResult res;
  res.config = config;
  res.config_hash = config_hash(config);
  res.benchmark_shift = find_benchmark(config, vd);
  res.reference_estimator = find_reference(config);
  res.rows.reserve(n_tasks * static_cast<std::size_t>(L.per_task()));
  for (int s = 0; s < L.shifts; ++s) {
    for (int f = 0; f < L.fractions; ++f) {
      for (int r = 0; r < config.replicates; ++r) {
        auto& tr = task_rows[static_cast<std::size_t>(s) * config.replicates + r];
        const auto begin = tr.begin() + static_cast<std::ptrdiff_t>(f) * L.per_fraction();
        std::move(begin, begin + L.per_fraction(), std::back_inserter(res.rows));
      }
    }
  }
  for (const auto& row : res.rows) res.n_errors += row.error.empty() ? 0 : 1;
  res.aggregates = aggregate_rows(config, res.rows, res.benchmark_shift, res.reference_estimator);
  return res;
}

std::vector<std::filesystem::path> write_outputs(const ScenarioResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create '" + dir.string() + "': " + ec.message());
  const auto& cfg = result.config;
  std::vector<std::filesystem::path> written;

  auto rule_name = [&](int k) { return k < 0 ? std::string("none") : cfg.rules[static_cast<std::size_t>(k)].name; };

  if (cfg.output.write_rows) {
    const auto p = dir / "rows.csv";
    std::ofstream os;
    open_or_throw(os, p);
    os << "replicate,shift_index,shift,baseline_fraction,estimator,rule,effect,treat_mean,ctrl_mean,statistic,stop,"
          "error\n";
    for (const auto& r : result.rows) {
      os << r.replicate << ',' << r.shift_index << ',' << shift_text(cfg.shift_grid[r.shift_index]) << ','
         << format_double(cfg.baseline_fraction_grid[r.fraction_index]) << ','
         << cfg.estimators[r.estimator_index].name << ',' << rule_name(r.rule_index) << ','
         << format_double(r.effect) << ',' << format_double(r.treat_mean) << ',' << format_double(r.ctrl_mean) << ','
         << format_double(r.statistic) << ',' << (r.stop < 0 ? std::string("NA") : std::to_string(r.stop)) << ','
         << csv_quote(r.error) << '\n';
    }
    close_or_throw(os, p);
    written.push_back(p);
  }
  {
    const auto p = dir / "aggregates.csv";
    std::ofstream os;
    open_or_throw(os, p);
    os << "shift_index,shift,baseline_fraction,estimator,rule,n_ok,n_errors,mean_effect,var_effect,mc_se_effect,"
          "n_stops,stop_probability,mc_se,relative_change,correction_fraction\n";
    for (const auto& a : result.aggregates) {
      os << a.shift_index << ',' << shift_text(cfg.shift_grid[a.shift_index]) << ','
         << format_double(cfg.baseline_fraction_grid[a.fraction_index]) << ','
         << cfg.estimators[a.estimator_index].name << ',' << rule_name(a.rule_index) << ',' << a.n_ok << ','
         << a.n_errors << ',' << format_double(a.mean_effect) << ',' << format_double(a.var_effect) << ','
         << format_double(a.mc_se_effect) << ',';
      if (a.stops) {
        os << a.stops->n_stops << ',' << format_double(a.stops->stop_probability) << ','
           << format_double(a.stops->mc_standard_error);
      } else {
        os << "NA,NA,NA";
      }
      os << ',' << format_double(a.relative_change) << ',' << format_double(a.correction_fraction) << '\n';
    }
    close_or_throw(os, p);
    written.push_back(p);
  }
  {
    const auto p = dir / "provenance.json";
    nlohmann::ordered_json j;
    j["version"] = kVersion;
    j["config_hash"] = hex64(result.config_hash);
    j["master_seed"] = cfg.master_seed;
    j["rows"] = result.rows.size();
    j["errors"] = result.n_errors;
    j["benchmark_shift_index"] = result.benchmark_shift ? nlohmann::ordered_json(*result.benchmark_shift) : nullptr;
    j["reference_estimator"] =
        result.reference_estimator ? nlohmann::ordered_json(cfg.estimators[*result.reference_estimator].name) : nullptr;
    j["config"] = nlohmann::ordered_json::parse(to_json(cfg, -1));
    std::ofstream os;
    open_or_throw(os, p);
    os << j.dump(2) << '\n';
    close_or_throw(os, p);
    written.push_back(p);
  }
  return written;
}

CutoffCurve tune_hybrid_cutoff(const ScenarioConfig& config, const std::vector<int>& cutoff_grid,
                               const RunOptions& options) {
  if (cutoff_grid.empty()) throw Error(ErrorCode::ConfigError, "cutoff grid must not be empty");
  for (int c : cutoff_grid) {
    if (c < 0) throw Error(ErrorCode::ConfigError, "cutoffs must be >= 0");
  }
  if (config.design.endpoint.is_binary()) throw Error(ErrorCode::ConfigError, "cutoff tuning needs a continuous endpoint");
  const ValidatedDesign vd = validate_config(config);
  const auto bench_shift = find_benchmark(config, vd);
  if (!bench_shift) throw Error(ErrorCode::ConfigError, "shift_grid must contain the design proportions");
  if (config.shift_grid.size() != 2) {
    throw Error(ErrorCode::ConfigError, "shift_grid must hold the design proportions and exactly one shifted composition");
  }
  const int target = 1 - *bench_shift;

  ModelSpec model{ModelKind::RandomInterceptLmm, false};
  for (const auto& e : config.estimators) {
    if (e.spec.kind == EstimatorKind::HybridPostStrat || e.spec.kind == EstimatorKind::ModelBasedPostStrat) {
      model = e.spec.model;
      break;
    }
  }

  ScenarioConfig run = config;
  run.rules.clear();
  run.baseline_fraction_grid = {1.0};
  run.output.write_rows = false;
  run.estimators.clear();
  run.estimators.push_back({"benchmark", {EstimatorKind::Unadjusted, model, 0, {}}});
  run.estimators.push_back({"naive", {EstimatorKind::NaivePostStrat, model, 0, {}}});
  run.estimators.push_back({"model", {EstimatorKind::ModelBasedPostStrat, model, 0, {}}});
  for (int c : cutoff_grid) {
    run.estimators.push_back({"hybrid_" + std::to_string(c), {EstimatorKind::HybridPostStrat, model, c, {}}});
  }
  std::vector<NamedEstimator> unique;
  for (auto& e : run.estimators) {
    if (std::find(unique.begin(), unique.end(), e) == unique.end()) unique.push_back(e);
  }
  run.estimators = unique;
  const auto res = run_scenario(run, options);

  auto index_of = [&](const std::string& name) {
    for (std::size_t e = 0; e < run.estimators.size(); ++e) {
      if (run.estimators[e].name == name) return static_cast<int>(e);
    }
    throw Error(ErrorCode::InvalidArgument, "no estimator " + name);
  };

  CutoffCurve curve;
  curve.benchmark = res.effects(*bench_shift, 0, 0);
  curve.naive_distance = wasserstein_l1(res.effects(target, 0, 1), curve.benchmark);
  curve.model_distance = wasserstein_l1(res.effects(target, 0, 2), curve.benchmark);
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_sample;
  for (int c : cutoff_grid) {
    const auto h = res.effects(target, 0, index_of("hybrid_" + std::to_string(c)));
    const double d = wasserstein_l1(h, curve.benchmark);
    curve.cutoffs.push_back(c);
    curve.distances.push_back(d);
    if (d < best) {
      best = d;
      curve.argmin = c;
      best_sample = h;
    }
  }
  curve.argmin_bootstrap_se = wasserstein_bootstrap_se(best_sample, curve.benchmark, 200,
                                                       child_seed(config.master_seed, StreamTag::Bootstrap, 0));
  return curve;
}

}  // namespace futilsim
