#include "futilsim/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "futilsim/error.hpp"
#include "futilsim/lmm.hpp"

namespace futilsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw Error(ErrorCode::LengthMismatch, what);
}

double weighted_sum(std::span<const double> means, std::span<const double> props) {
  check_lengths(means.size(), props.size(), "stratum means and proportions differ in length");
  double s = 0.0;
  for (std::size_t k = 0; k < means.size(); ++k) {
    if (props[k] == 0.0) continue;
    if (!std::isfinite(means[k])) throw Error(ErrorCode::EmptyStratum, "no estimate for a weighted stratum");
    s += props[k] * means[k];
  }
  return s;
}

}  // namespace

std::vector<double> Stratification::expand(std::span<const double> subgroup_props) const {
  if (static_cast<int>(subgroup_props.size()) != subgroups) {
    throw Error(ErrorCode::LengthMismatch, "proportions do not match the number of subgroups");
  }
  if (kind == Kind::Subgroup) return {subgroup_props.begin(), subgroup_props.end()};
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count()));
  for (double p : subgroup_props) {
    for (int s = 0; s < sites; ++s) out.push_back(p / sites);
  }
  return out;
}

int StratumTable::total_n() const {
  int n = 0;
  for (const auto& c : cells) n += c.n;
  return n;
}

double StratumTable::total_sum() const {
  double s = 0.0;
  for (const auto& c : cells) s += c.sum;
  return s;
}

double StratumTable::grand_mean() const {
  const int n = total_n();
  return n > 0 ? total_sum() / n : kNaN;
}

std::vector<double> StratumTable::sample_proportions() const {
  const double n = total_n();
  std::vector<double> p;
  p.reserve(cells.size());
  for (const auto& c : cells) p.push_back(n > 0 ? c.n / n : kNaN);
  return p;
}

StratumTable stratum_summaries(std::span<const PatientRecord> records, std::optional<Arm> arm,
                               const Stratification& strata) {
  StratumTable t;
  t.cells.resize(static_cast<std::size_t>(strata.count()));
  for (const auto& r : records) {
    if (arm && r.arm != *arm) continue;
    const int k = strata.index(r);
    if (k < 0 || k >= strata.count()) throw Error(ErrorCode::InvalidArgument, "record stratum out of range");
    t.cells[k].n += 1;
    t.cells[k].sum += r.outcome;
  }
  if (t.total_n() == 0) throw Error(ErrorCode::EmptyInput, "no records after filtering");
  for (auto& c : t.cells) {
    c.mean = c.n > 0 ? c.sum / c.n : kNaN;
    c.variance = c.n > 1 ? 0.0 : kNaN;
  }
  for (const auto& r : records) {
    if (arm && r.arm != *arm) continue;
    auto& c = t.cells[strata.index(r)];
    if (c.n > 1) c.variance += (r.outcome - c.mean) * (r.outcome - c.mean);
  }
  for (auto& c : t.cells) {
    if (c.n > 1) c.variance /= (c.n - 1);
  }
  return t;
}

Proportions Proportions::design_truth(std::vector<double> p) {
  check_simplex(p, "design proportions");
  return {std::move(p), Source::DesignTruth, 0};
}

Proportions Proportions::estimated(std::vector<double> p, int n_baseline) {
  check_simplex(p, "estimated proportions");
  return {std::move(p), Source::Estimated, n_baseline};
}

double post_stratified_mean(const StratumTable& table, std::span<const double> props) {
  check_lengths(table.size(), props.size(), "stratum table and proportions differ in length");
  double s = 0.0;
  for (std::size_t k = 0; k < props.size(); ++k) {
    if (props[k] == 0.0) continue;
    if (table.cells[k].n == 0) {
      throw Error(ErrorCode::EmptyStratum,
                  "stratum " + std::to_string(k) + " has positive weight but no observations");
    }
    s += props[k] * table.cells[k].mean;
  }
  return s;
}

double shrinkage_weight(double tau2, double sigma2, double n) {
  if (tau2 <= 0.0) return 0.0;
  return tau2 / (tau2 + sigma2 / n);
}

HierarchicalFit fit_hierarchical(const StratumTable& table) {
  int observed = 0;
  double ss_within = 0.0;
  double df_within = 0.0;
  for (const auto& c : table.cells) {
    if (c.n >= 1) ++observed;
    if (c.n >= 2) {
      ss_within += c.variance * (c.n - 1);
      df_within += c.n - 1;
    }
  }
  if (observed < 2) throw Error(ErrorCode::Inestimable, "need at least two observed strata");
  if (df_within <= 0.0) throw Error(ErrorCode::Inestimable, "no stratum has two observations; sigma^2 inestimable");

  HierarchicalFit fit;
  fit.sigma2_hat = ss_within / df_within;
  const std::size_t K = table.size();

  if (fit.sigma2_hat > 0.0) {
    // DerSimonian-Laird: weights n_k / sigma^2 under tau^2 = 0.
    double sw = 0.0, sw2 = 0.0, swy = 0.0;
    for (const auto& c : table.cells) {
      if (c.n == 0) continue;
      const double w = c.n / fit.sigma2_hat;
      sw += w;
      sw2 += w * w;
      swy += w * c.mean;
    }
    const double ybar = swy / sw;
    double q = 0.0;
    for (const auto& c : table.cells) {
      if (c.n == 0) continue;
      q += c.n / fit.sigma2_hat * (c.mean - ybar) * (c.mean - ybar);
    }
    const double denom = sw - sw2 / sw;
    fit.tau2_hat = denom > 0.0 ? std::max(0.0, (q - (observed - 1)) / denom) : 0.0;
  } else {
    // No within-stratum spread: the between-stratum moment estimate is the
    // plain variance of the observed means.
    double m = 0.0;
    for (const auto& c : table.cells) {
      if (c.n > 0) m += c.mean;
    }
    m /= observed;
    double v = 0.0;
    for (const auto& c : table.cells) {
      if (c.n > 0) v += (c.mean - m) * (c.mean - m);
    }
    fit.tau2_hat = v / (observed - 1);
  }

  double num = 0.0, den = 0.0;
  for (const auto& c : table.cells) {
    if (c.n == 0) continue;
    const double var_k = fit.tau2_hat + fit.sigma2_hat / c.n;
    const double w = var_k > 0.0 ? 1.0 / var_k : 1.0;
    num += w * c.mean;
    den += w;
  }
  fit.mu_hat = num / den;

  fit.weights.resize(K);
  fit.pooled_means.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = table.cells[k];
    double w = 0.0;
    if (c.n > 0) {
      w = fit.sigma2_hat > 0.0 ? shrinkage_weight(fit.tau2_hat, fit.sigma2_hat, c.n)
                               : (fit.tau2_hat > 0.0 ? 1.0 : 0.0);
    }
    fit.weights[k] = w;
    fit.pooled_means[k] = c.n > 0 ? w * c.mean + (1.0 - w) * fit.mu_hat : fit.mu_hat;
  }
  return fit;
}

std::vector<double> hybrid_means(const StratumTable& table, std::span<const double> model_means, int cutoff) {
  check_lengths(table.size(), model_means.size(), "model means and stratum table differ in length");
  if (cutoff < 0) throw Error(ErrorCode::InvalidArgument, "hybrid cutoff must be >= 0");
  std::vector<double> out(table.size());
  for (std::size_t k = 0; k < table.size(); ++k) {
    const auto& c = table.cells[k];
    // An empty stratum has no empirical mean even at cutoff 0.
    out[k] = (c.n >= cutoff && c.n > 0) ? c.mean : model_means[k];
  }
  return out;
}

Proportions estimate_stratum_proportions(std::span<const PatientRecord> baseline, const Stratification& strata,
                                         bool fallback_to_design, std::span<const double> design_props) {
  if (baseline.empty()) throw Error(ErrorCode::EmptyInput, "baseline set is empty");
  const int K = strata.count();
  std::vector<double> counts(static_cast<std::size_t>(K), 0.0);
  for (const auto& r : baseline) counts[strata.index(r)] += 1.0;
  const double n = static_cast<double>(baseline.size());

  std::vector<double> p(counts.size());
  bool substituted = false;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] > 0.0) {
      p[k] = counts[k] / n;
      continue;
    }
    if (!fallback_to_design) {
      throw Error(ErrorCode::MissingStratum, "stratum " + std::to_string(k) + " absent from baseline data");
    }
    check_lengths(design_props.size(), counts.size(), "design proportions do not match strata");
    p[k] = design_props[k];
    substituted = true;
  }
  if (substituted) {
    double s = 0.0;
    for (double v : p) s += v;
    for (double& v : p) v /= s;
  }
  // Exact counts / n can drift from a unit sum by an ulp or two.
  double s = 0.0;
  for (double v : p) s += v;
  if (std::abs(s - 1.0) > kSimplexTolerance) {
    for (double& v : p) v /= s;
  }
  return Proportions::estimated(std::move(p), static_cast<int>(baseline.size()));
}

std::array<std::vector<double>, 2> stratum_means_for(std::span<const PatientRecord> ia_records,
                                                     const EstimatorSpec& spec, const EstimationContext& ctx) {
  const std::array<StratumTable, 2> tables{stratum_summaries(ia_records, Arm::Treatment, ctx.strata),
                                           stratum_summaries(ia_records, Arm::Control, ctx.strata)};
  std::array<std::vector<double>, 2> raw;
  for (int a = 0; a < 2; ++a) {
    for (const auto& c : tables[a].cells) raw[a].push_back(c.mean);
  }
  if (spec.kind == EstimatorKind::Unadjusted || spec.kind == EstimatorKind::NaivePostStrat) return raw;

  std::array<std::vector<double>, 2> model;
  if (spec.model.kind == ModelKind::HierarchicalNormal) {
    for (int a = 0; a < 2; ++a) model[a] = fit_hierarchical(tables[a]).pooled_means;
  } else {
    if (ctx.endpoint == EndpointKind::Binary) {
      throw Error(ErrorCode::InvalidArgument, "random-intercept LMM requires a continuous endpoint");
    }
    const LmmFit fit = fit_random_intercept_lmm(ia_records, spec.model, ctx.strata.subgroups);
    for (int a = 0; a < 2; ++a) {
      const Arm arm = static_cast<Arm>(a);
      if (ctx.strata.kind == Stratification::Kind::Subgroup) {
        model[a] = predict_stratum_means(fit, arm);
      } else {
        for (int s = 0; s < ctx.strata.count(); ++s) {
          model[a].push_back(predict_cell_mean(fit, arm, ctx.strata.subgroup_of(s), ctx.strata.site_of(s)));
        }
      }
    }
  }
  if (spec.kind == EstimatorKind::ModelBasedPostStrat) return model;

  std::array<std::vector<double>, 2> hybrid;
  for (int a = 0; a < 2; ++a) hybrid[a] = hybrid_means(tables[a], model[a], spec.cutoff);
  return hybrid;
}

EffectEstimate estimate_treatment_effect(std::span<const PatientRecord> ia_records, const EstimatorSpec& spec,
                                         const Proportions& props, const EstimationContext& ctx) {
  std::array<int, 2> n{0, 0};
  std::array<double, 2> sum{0.0, 0.0};
  for (const auto& r : ia_records) {
    n[static_cast<int>(r.arm)] += 1;
    sum[static_cast<int>(r.arm)] += r.outcome;
  }
  if (n[0] == 0 || n[1] == 0) throw Error(ErrorCode::ArmMissing, "both arms must be present in the IA data");

  EffectEstimate est;
  est.method = spec;
  est.proportions_used = props;
  if (spec.kind == EstimatorKind::Unadjusted) {
    est.per_arm_means = {sum[0] / n[0], sum[1] / n[1]};
  } else if (spec.kind == EstimatorKind::NaivePostStrat) {
    for (int a = 0; a < 2; ++a) {
      est.per_arm_means[a] = post_stratified_mean(stratum_summaries(ia_records, static_cast<Arm>(a), ctx.strata), props.p);
    }
  } else {
    const auto means = stratum_means_for(ia_records, spec, ctx);
    for (int a = 0; a < 2; ++a) est.per_arm_means[a] = weighted_sum(means[a], props.p);
  }
  est.value = est.per_arm_means[0] - est.per_arm_means[1];
  return est;
}

}  // namespace futilsim
