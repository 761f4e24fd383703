#include "futilsim/lmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "futilsim/error.hpp"

namespace futilsim {

namespace {

constexpr double kLogLambdaMin = -6.0;
constexpr double kLogLambdaMax = 3.0;
constexpr int kGridPointsPerDecade = 10;
constexpr double kGoldenTolerance = 1e-8;

int num_columns(const ModelSpec& model, int k) {
  return 2 + (k - 1) + (model.treatment_by_subgroup_interaction ? k - 1 : 0);
}

}  // namespace

Eigen::VectorXd design_row(const ModelSpec& model, int num_subgroups, int subgroup, Arm arm) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(num_columns(model, num_subgroups));
  const double t = arm == Arm::Treatment ? 1.0 : 0.0;
  x[0] = 1.0;
  if (subgroup > 0) x[subgroup] = 1.0;
  x[num_subgroups] = t;
  if (model.treatment_by_subgroup_interaction && subgroup > 0) x[num_subgroups + subgroup] = t;
  return x;
}

RemlProfile::RemlProfile(std::span<const PatientRecord> records, const ModelSpec& model, int num_subgroups)
    : model_(model), num_subgroups_(num_subgroups) {
  if (model.kind != ModelKind::RandomInterceptLmm) {
    throw Error(ErrorCode::InvalidArgument, "RemlProfile needs a random-intercept model spec");
  }
  if (num_subgroups < 1) throw Error(ErrorCode::InvalidArgument, "num_subgroups must be >= 1");
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no records to fit");

  p_ = num_columns(model, num_subgroups);
  n_ = static_cast<Eigen::Index>(records.size());

  for (const auto& r : records) max_site_ = std::max(max_site_, r.site_index);
  std::vector<int> slot(static_cast<std::size_t>(max_site_ + 1), -1);
  Eigen::MatrixXd X(n_, p_);
  for (Eigen::Index i = 0; i < n_; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    if (r.subgroup_index < 0 || r.subgroup_index >= num_subgroups) {
      throw Error(ErrorCode::InvalidArgument, "record subgroup index out of range");
    }
    const Eigen::VectorXd x = design_row(model, num_subgroups, r.subgroup_index, r.arm);
    X.row(i) = x.transpose();
    int& s = slot[r.site_index];
    if (s < 0) {
      s = static_cast<int>(sites_.size());
      SiteStats st;
      st.site = r.site_index;
      st.xtx = Eigen::MatrixXd::Zero(p_, p_);
      st.xt1 = Eigen::VectorXd::Zero(p_);
      st.xty = Eigen::VectorXd::Zero(p_);
      sites_.push_back(std::move(st));
    }
    SiteStats& st = sites_[s];
    st.n += 1.0;
    st.xtx.noalias() += x * x.transpose();
    st.xt1 += x;
    st.xty += x * r.outcome;
    st.sum_y += r.outcome;
    st.yty += r.outcome * r.outcome;
  }

  if (sites_.size() < 2) throw Error(ErrorCode::TooFewSites, "random intercept needs >= 2 observed sites");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < p_ || n_ <= p_) {
    throw Error(ErrorCode::RankDeficient, "fixed-effects design is not of full column rank");
  }
}

int RemlProfile::num_sites_observed() const { return static_cast<int>(sites_.size()); }

std::vector<double> RemlProfile::grid() {
  std::vector<double> g;
  const int steps = static_cast<int>((kLogLambdaMax - kLogLambdaMin) * kGridPointsPerDecade);
  for (int i = 0; i <= steps; ++i) {
    g.push_back(std::pow(10.0, kLogLambdaMin + static_cast<double>(i) / kGridPointsPerDecade));
  }
  return g;
}

RemlProfile::Gls RemlProfile::solve(double lambda) const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p_, p_);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p_);
  double yvy = 0.0;
  double logdet_v = 0.0;
  for (const auto& s : sites_) {
    const double c = lambda / (1.0 + lambda * s.n);
    a.noalias() += s.xtx - c * s.xt1 * s.xt1.transpose();
    b.noalias() += s.xty - c * s.sum_y * s.xt1;
    yvy += s.yty - c * s.sum_y * s.sum_y;
    logdet_v += std::log1p(lambda * s.n);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  Gls out;
  out.beta = llt.solve(b);
  out.q = yvy - b.dot(out.beta);
  const Eigen::MatrixXd l = llt.matrixL();
  out.logdet_a = 2.0 * l.diagonal().array().log().sum();
  out.logdet_v = logdet_v;
  return out;
}

double RemlProfile::log_likelihood(double lambda) const {
  const Gls g = solve(lambda);
  const double dof = static_cast<double>(n_ - p_);
  if (!(g.q > 0.0) || !std::isfinite(g.logdet_a)) return -std::numeric_limits<double>::infinity();
  return -0.5 * (dof * (std::log(2.0 * std::numbers::pi * g.q / dof) + 1.0) + g.logdet_v + g.logdet_a);
}

LmmFit RemlProfile::fit() const {
  const auto g = grid();
  std::vector<double> ll(g.size());
  std::size_t best = 0;
  bool any_finite = false;
  for (std::size_t i = 0; i < g.size(); ++i) {
    ll[i] = log_likelihood(g[i]);
    if (std::isfinite(ll[i])) {
      if (!any_finite || ll[i] > ll[best]) best = i;
      any_finite = true;
    }
  }
  if (!any_finite) throw Error(ErrorCode::NoConvergence, "restricted likelihood is not finite on the grid");

  double lambda = g[best];
  double best_ll = ll[best];
  bool converged = true;
  if (best + 1 == g.size()) {
    // Maximum sits on the upper edge: no bracket, so no interior optimum was found.
    converged = false;
  } else {
    double lo = std::log(g[best == 0 ? 0 : best - 1]);
    double hi = std::log(g[best + 1]);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = log_likelihood(std::exp(x1));
    double f2 = log_likelihood(std::exp(x2));
    int iter = 0;
    while (hi - lo > kGoldenTolerance && iter++ < 200) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + inv_phi * (hi - lo);
        f2 = log_likelihood(std::exp(x2));
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - inv_phi * (hi - lo);
        f1 = log_likelihood(std::exp(x1));
      }
    }
    converged = hi - lo <= kGoldenTolerance;
    const double x = 0.5 * (lo + hi);
    const double fx = log_likelihood(std::exp(x));
    if (fx >= best_ll) {
      lambda = std::exp(x);
      best_ll = fx;
    }
  }

  const Gls gls = solve(lambda);
  LmmFit fit;
  fit.fixed_effects.assign(gls.beta.data(), gls.beta.data() + gls.beta.size());
  fit.names.push_back("(Intercept)");
  for (int k = 1; k < num_subgroups_; ++k) fit.names.push_back("subgroup" + std::to_string(k + 1));
  fit.names.push_back("treatment");
  if (model_.treatment_by_subgroup_interaction) {
    for (int k = 1; k < num_subgroups_; ++k) fit.names.push_back("treatment:subgroup" + std::to_string(k + 1));
  }
  fit.sigma2_resid = gls.q / static_cast<double>(n_ - p_);
  fit.sigma2_site = lambda * fit.sigma2_resid;
  fit.lambda = lambda;
  fit.converged = converged;
  fit.log_restricted_likelihood = best_ll;
  fit.num_subgroups = num_subgroups_;
  fit.interaction = model_.treatment_by_subgroup_interaction;
  fit.site_blups.assign(static_cast<std::size_t>(max_site_ + 1), 0.0);
  for (const auto& s : sites_) {
    const double c = lambda / (1.0 + lambda * s.n);
    fit.site_blups[s.site] = c * (s.sum_y - s.xt1.dot(gls.beta));
  }
  return fit;
}

LmmFit fit_random_intercept_lmm(std::span<const PatientRecord> records, const ModelSpec& model,
                                int num_subgroups) {
  return RemlProfile(records, model, num_subgroups).fit();
}

std::vector<double> predict_stratum_means(const LmmFit& fit, Arm arm) {
  if (!fit.converged) throw Error(ErrorCode::NotConverged, "LMM fit did not converge");
  const ModelSpec model{ModelKind::RandomInterceptLmm, fit.interaction};
  const Eigen::Map<const Eigen::VectorXd> beta(fit.fixed_effects.data(),
                                               static_cast<Eigen::Index>(fit.fixed_effects.size()));
  std::vector<double> out;
  for (int k = 0; k < fit.num_subgroups; ++k) out.push_back(design_row(model, fit.num_subgroups, k, arm).dot(beta));
  return out;
}

double predict_cell_mean(const LmmFit& fit, Arm arm, int subgroup, int site) {
  const double fixed = predict_stratum_means(fit, arm).at(static_cast<std::size_t>(subgroup));
  const double u = site >= 0 && site < static_cast<int>(fit.site_blups.size()) ? fit.site_blups[site] : 0.0;
  return fixed + u;
}

}  // namespace futilsim
