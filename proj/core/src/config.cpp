#include "futilsim/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "futilsim/error.hpp"
#include "futilsim/rng.hpp"

namespace futilsim {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

// Strict view of one JSON object: every key must be consumed.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_ + " must be an object");
  }
  Reader(const Reader&) = delete;

  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) fail("unknown key '" + where(k) + "'");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    if (!j_.contains(key)) fail("missing required key '" + where(key) + "'");
    used_.insert(key);
    return j_.at(key);
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_number()) fail("'" + where(key) + "' must be a number");
    return v.get<double>();
  }
  double number(const std::string& key, double def) { return has(key) ? number(key) : def; }

  int integer(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_number_integer()) fail("'" + where(key) + "' must be an integer");
    const auto x = v.get<std::int64_t>();
    if (x < INT32_MIN || x > INT32_MAX) fail("'" + where(key) + "' is out of range");
    return static_cast<int>(x);
  }
  int integer(const std::string& key, int def) { return has(key) ? integer(key) : def; }

  std::uint64_t unsigned64(const std::string& key, std::uint64_t def) {
    if (!has(key)) return def;
    const auto& v = at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    fail("'" + where(key) + "' must be a non-negative integer");
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const auto& v = at(key);
    if (!v.is_boolean()) fail("'" + where(key) + "' must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_string()) fail("'" + where(key) + "' must be a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& def) { return has(key) ? string(key) : def; }

  const json& array(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_array()) fail("'" + where(key) + "' must be an array");
    return v;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <class E>
struct EnumName {
  E value;
  const char* name;
};

constexpr EnumName<EstimatorKind> kEstimatorKinds[] = {
    {EstimatorKind::Unadjusted, "unadjusted"},
    {EstimatorKind::NaivePostStrat, "naive_post_strat"},
    {EstimatorKind::ModelBasedPostStrat, "model_based_post_strat"},
    {EstimatorKind::HybridPostStrat, "hybrid_post_strat"},
};
constexpr EnumName<RuleKind> kRuleKinds[] = {
    {RuleKind::PosteriorProb, "posterior_prob"},
    {RuleKind::PredictiveProb, "predictive_prob"},
};
constexpr EnumName<ModelKind> kModelKinds[] = {
    {ModelKind::HierarchicalNormal, "hierarchical_normal"},
    {ModelKind::RandomInterceptLmm, "random_intercept_lmm"},
};
constexpr EnumName<ProportionSourceKind> kSourceKinds[] = {
    {ProportionSourceKind::DesignTruth, "design_truth"},
    {ProportionSourceKind::EstimatedFromBaseline, "estimated_from_baseline"},
};
constexpr EnumName<EndpointKind> kEndpointKinds[] = {
    {EndpointKind::Binary, "binary"},
    {EndpointKind::Continuous, "continuous"},
};
constexpr EnumName<Randomization> kRandomizations[] = {
    {Randomization::StratifiedBlocks, "stratified_blocks"},
    {Randomization::Complete, "complete"},
};
constexpr EnumName<BaselineRemainder> kRemainders[] = {
    {BaselineRemainder::FinitePopulation, "finite_population"},
    {BaselineRemainder::DesignDistribution, "design_distribution"},
};
constexpr EnumName<Stratification::Kind> kStratifiers[] = {
    {Stratification::Kind::Subgroup, "subgroup"},
    {Stratification::Kind::SubgroupBySite, "subgroup_x_site"},
};

template <class E, std::size_t N>
E parse_enum(const EnumName<E> (&table)[N], const std::string& s, const std::string& where) {
  for (const auto& e : table) {
    if (s == e.name) return e.value;
  }
  std::string allowed;
  for (const auto& e : table) allowed += std::string(allowed.empty() ? "" : ", ") + e.name;
  fail("'" + where + "' must be one of: " + allowed + " (got '" + s + "')");
}

template <class E, std::size_t N>
std::string enum_name(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table) {
    if (e.value == v) return e.name;
  }
  return "unknown";
}

std::vector<double> number_list(const json& arr, const std::string& where) {
  std::vector<double> out;
  for (const auto& v : arr) {
    if (!v.is_number()) fail("'" + where + "' must contain numbers only");
    out.push_back(v.get<double>());
  }
  return out;
}

TrialDesign read_design(const json& j) {
  Reader r(j, "design");
  TrialDesign d;
  d.total_n = r.integer("total_n");
  if (r.has("allocation")) {
    Reader a(r.at("allocation"), "design.allocation");
    d.allocation.treatment = a.integer("treatment", 1);
    d.allocation.control = a.integer("control", 1);
  }
  {
    Reader e(r.at("endpoint"), "design.endpoint");
    d.endpoint.kind = parse_enum(kEndpointKinds, e.string("kind"), "design.endpoint.kind");
    if (d.endpoint.kind == EndpointKind::Continuous) {
      d.endpoint.residual_sd = e.number("residual_sd");
    } else if (e.has("residual_sd")) {
      fail("'design.endpoint.residual_sd' applies to continuous endpoints only");
    }
  }
  const auto& sgs = r.array("subgroups");
  for (std::size_t i = 0; i < sgs.size(); ++i) {
    Reader s(sgs[i], "design.subgroups[" + std::to_string(i) + "]");
    SubgroupSpec sg;
    sg.label = s.string("label", "S" + std::to_string(i + 1));
    sg.population_proportion = s.number("population_proportion");
    sg.control_param = s.number("control_param");
    sg.treatment_effect = s.number("treatment_effect");
    d.subgroups.push_back(sg);
  }
  if (r.has("sites")) {
    Reader s(r.at("sites"), "design.sites");
    d.sites.count = s.integer("count", 1);
    d.sites.effect_sd = s.number("effect_sd", 0.0);
  }
  d.ia_fraction = r.number("ia_fraction", 0.4);
  d.randomization = parse_enum(kRandomizations, r.string("randomization", "stratified_blocks"), "design.randomization");
  return d;
}

NamedEstimator read_estimator(const json& j, std::size_t i) {
  const std::string path = "estimators[" + std::to_string(i) + "]";
  Reader r(j, path);
  NamedEstimator ne;
  ne.spec.kind = parse_enum(kEstimatorKinds, r.string("kind"), path + ".kind");
  ne.name = r.string("name", enum_name(kEstimatorKinds, ne.spec.kind));
  if (r.has("model")) {
    Reader m(r.at("model"), path + ".model");
    ne.spec.model.kind = parse_enum(kModelKinds, m.string("kind"), path + ".model.kind");
    ne.spec.model.treatment_by_subgroup_interaction = m.boolean("treatment_by_subgroup_interaction", false);
  }
  ne.spec.cutoff = r.integer("cutoff", 10);
  if (r.has("proportion_source")) {
    Reader p(r.at("proportion_source"), path + ".proportion_source");
    ne.spec.proportion_source.kind = parse_enum(kSourceKinds, p.string("kind"), path + ".proportion_source.kind");
    ne.spec.proportion_source.fallback_to_design = p.boolean("fallback_to_design", false);
  }
  return ne;
}

NamedRule read_rule(const json& j, std::size_t i) {
  const std::string path = "rules[" + std::to_string(i) + "]";
  Reader r(j, path);
  NamedRule nr;
  nr.spec.kind = parse_enum(kRuleKinds, r.string("kind"), path + ".kind");
  nr.name = r.string("name", enum_name(kRuleKinds, nr.spec.kind));
  nr.spec.effect_threshold_delta = r.number("effect_threshold_delta", 0.2);
  nr.spec.futility_cut = r.number("futility_cut", 0.1);
  if (r.has("prior")) {
    Reader p(r.at("prior"), path + ".prior");
    nr.spec.prior.alpha = p.number("alpha", 1.0);
    nr.spec.prior.beta = p.number("beta", 1.0);
  }
  nr.spec.final_success_gamma = r.number("final_success_gamma", 0.9);
  nr.spec.pp_draws = r.integer("pp_draws", 1000);
  return nr;
}

json design_json(const TrialDesign& d) {
  json sgs = json::array();
  for (const auto& s : d.subgroups) {
    sgs.push_back({{"label", s.label},
                   {"population_proportion", s.population_proportion},
                   {"control_param", s.control_param},
                   {"treatment_effect", s.treatment_effect}});
  }
  json endpoint = {{"kind", enum_name(kEndpointKinds, d.endpoint.kind)}};
  if (!d.endpoint.is_binary()) endpoint["residual_sd"] = d.endpoint.residual_sd;
  return {{"total_n", d.total_n},
          {"allocation", {{"treatment", d.allocation.treatment}, {"control", d.allocation.control}}},
          {"endpoint", endpoint},
          {"subgroups", sgs},
          {"sites", {{"count", d.sites.count}, {"effect_sd", d.sites.effect_sd}}},
          {"ia_fraction", d.ia_fraction},
          {"randomization", enum_name(kRandomizations, d.randomization)}};
}

json config_json(const ScenarioConfig& c) {
  json shifts = json::array();
  for (const auto& s : c.shift_grid) shifts.push_back(s.ia_subgroup_proportions);
  json ests = json::array();
  for (const auto& e : c.estimators) {
    ests.push_back({{"name", e.name},
                    {"kind", enum_name(kEstimatorKinds, e.spec.kind)},
                    {"model",
                     {{"kind", enum_name(kModelKinds, e.spec.model.kind)},
                      {"treatment_by_subgroup_interaction", e.spec.model.treatment_by_subgroup_interaction}}},
                    {"cutoff", e.spec.cutoff},
                    {"proportion_source",
                     {{"kind", enum_name(kSourceKinds, e.spec.proportion_source.kind)},
                      {"fallback_to_design", e.spec.proportion_source.fallback_to_design}}}});
  }
  json rules = json::array();
  for (const auto& r : c.rules) {
    rules.push_back({{"name", r.name},
                     {"kind", enum_name(kRuleKinds, r.spec.kind)},
                     {"effect_threshold_delta", r.spec.effect_threshold_delta},
                     {"futility_cut", r.spec.futility_cut},
                     {"prior", {{"alpha", r.spec.prior.alpha}, {"beta", r.spec.prior.beta}}},
                     {"final_success_gamma", r.spec.final_success_gamma},
                     {"pp_draws", r.spec.pp_draws}});
  }
  return {{"design", design_json(c.design)},
          {"shift_grid", shifts},
          {"estimators", ests},
          {"rules", rules},
          {"baseline_fraction_grid", c.baseline_fraction_grid},
          {"baseline_remainder", enum_name(kRemainders, c.baseline_remainder)},
          {"stratifier", enum_name(kStratifiers, c.stratifier)},
          {"replicates", c.replicates},
          {"master_seed", c.master_seed},
          {"output", {{"write_rows", c.output.write_rows}}}};
}

bool csv_safe(const std::string& s) {
  return !s.empty() && s.find_first_of(",\"\n\r") == std::string::npos;
}

}  // namespace

std::string to_string(EstimatorKind kind) { return enum_name(kEstimatorKinds, kind); }
std::string to_string(RuleKind kind) { return enum_name(kRuleKinds, kind); }

ScenarioConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
  ScenarioConfig c;
  {
    Reader r(j, "");
    c.design = read_design(r.at("design"));
    const auto& shifts = r.array("shift_grid");
    for (std::size_t i = 0; i < shifts.size(); ++i) {
      const std::string where = "shift_grid[" + std::to_string(i) + "]";
      if (!shifts[i].is_array()) fail("'" + where + "' must be an array of proportions");
      c.shift_grid.push_back(ShiftSpec{number_list(shifts[i], where)});
    }
    const auto& ests = r.array("estimators");
    for (std::size_t i = 0; i < ests.size(); ++i) c.estimators.push_back(read_estimator(ests[i], i));
    if (r.has("rules")) {
      const auto& rules = r.array("rules");
      for (std::size_t i = 0; i < rules.size(); ++i) c.rules.push_back(read_rule(rules[i], i));
    }
    if (r.has("baseline_fraction_grid")) {
      c.baseline_fraction_grid = number_list(r.array("baseline_fraction_grid"), "baseline_fraction_grid");
    }
    c.baseline_remainder =
        parse_enum(kRemainders, r.string("baseline_remainder", "finite_population"), "baseline_remainder");
    c.stratifier = parse_enum(kStratifiers, r.string("stratifier", "subgroup"), "stratifier");
    c.replicates = r.integer("replicates");
    c.master_seed = r.unsigned64("master_seed", 1);
    if (r.has("output")) {
      Reader o(r.at("output"), "output");
      c.output.write_rows = o.boolean("write_rows", true);
    }
  }
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const ScenarioConfig& config, int indent) { return config_json(config).dump(indent); }

std::uint64_t config_hash(const ScenarioConfig& config) {
  auto j = config_json(config);
  j.erase("output");
  return hash_name(j.dump());
}

ValidatedDesign validate_config(const ScenarioConfig& c) {
  ValidatedDesign vd;
  try {
    vd = validate_design(c.design);
    for (const auto& s : c.shift_grid) validate_shift(vd, s);
    for (const auto& r : c.rules) validate_rule(r.spec);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    fail(e.what());
  }
  if (c.replicates < 1) fail("replicates must be >= 1");
  if (c.shift_grid.empty()) fail("shift_grid must not be empty");
  if (c.estimators.empty()) fail("estimators must not be empty");
  if (c.baseline_fraction_grid.empty()) fail("baseline_fraction_grid must not be empty");
  for (double f : c.baseline_fraction_grid) {
    if (!(f > 0.0 && f <= 1.0)) fail("baseline fractions must lie in (0, 1]");
    if (std::lround(f * c.design.total_n) < vd.ia_size()) {
      fail("baseline fraction " + std::to_string(f) + " cannot contain the interim set");
    }
  }
  if (!c.design.endpoint.is_binary() && !c.rules.empty()) {
    fail("futility rules apply to binary endpoints only");
  }
  std::set<std::string> names;
  for (const auto& e : c.estimators) {
    if (!csv_safe(e.name)) fail("estimator name '" + e.name + "' must be nonempty without commas or quotes");
    if (!names.insert(e.name).second) fail("duplicate estimator name '" + e.name + "'");
    if (e.spec.cutoff < 0) fail("hybrid cutoff must be >= 0");
    const bool uses_model =
        e.spec.kind == EstimatorKind::ModelBasedPostStrat || e.spec.kind == EstimatorKind::HybridPostStrat;
    if (uses_model && e.spec.model.kind == ModelKind::RandomInterceptLmm) {
      if (c.design.endpoint.is_binary()) fail("the random-intercept model needs a continuous endpoint");
      if (c.design.sites.count < 2) fail("the random-intercept model needs at least two sites");
    }
  }
  names.clear();
  for (const auto& r : c.rules) {
    if (!csv_safe(r.name)) fail("rule name '" + r.name + "' must be nonempty without commas or quotes");
    if (!names.insert(r.name).second) fail("duplicate rule name '" + r.name + "'");
  }
  return vd;
}

}  // namespace futilsim
