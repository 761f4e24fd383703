#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "futilsim/model.hpp"

namespace futilsim {

struct LmmFit {
  // intercept, subgroup 2..K contrasts, treatment, [treatment x subgroup 2..K]
  std::vector<double> fixed_effects;
  std::vector<std::string> names;
  double sigma2_resid = 0.0;
  double sigma2_site = 0.0;
  double lambda = 0.0;  // sigma2_site / sigma2_resid
  bool converged = false;
  double log_restricted_likelihood = 0.0;
  int num_subgroups = 1;
  bool interaction = false;
  std::vector<double> site_blups;  // conditional modes of the site intercepts
};

/// Profiled restricted likelihood of the random-intercept model as a
/// function of lambda = sigma2_site / sigma2_resid. Per-site sufficient
/// statistics make each evaluation O(sites * p^2).
class RemlProfile {
 public:
  RemlProfile(std::span<const PatientRecord> records, const ModelSpec& model, int num_subgroups);

  double log_likelihood(double lambda) const;
  int num_fixed() const { return static_cast<int>(p_); }
  int num_sites_observed() const;

  /// Grid used by the fit: 91 log-spaced points on [1e-6, 1e3].
  static std::vector<double> grid();

  LmmFit fit() const;

 private:
  struct SiteStats {
    int site = 0;
    double n = 0.0;
    Eigen::MatrixXd xtx;
    Eigen::VectorXd xt1;
    Eigen::VectorXd xty;
    double sum_y = 0.0;
    double yty = 0.0;
  };
  struct Gls {
    Eigen::VectorXd beta;
    double q = 0.0;
    double logdet_a = 0.0;
    double logdet_v = 0.0;
  };
  Gls solve(double lambda) const;

  ModelSpec model_;
  int num_subgroups_;
  int max_site_ = 0;
  Eigen::Index n_ = 0;
  Eigen::Index p_ = 0;
  std::vector<SiteStats> sites_;
};

LmmFit fit_random_intercept_lmm(std::span<const PatientRecord> records, const ModelSpec& model,
                                int num_subgroups);

/// Population-level (fixed-effects only) mean for each subgroup in `arm`.
std::vector<double> predict_stratum_means(const LmmFit& fit, Arm arm);

/// Fixed effects plus the site's conditional intercept, for subgroup x site cells.
double predict_cell_mean(const LmmFit& fit, Arm arm, int subgroup, int site);

/// Row of the fixed-effects design matrix for one record.
Eigen::VectorXd design_row(const ModelSpec& model, int num_subgroups, int subgroup, Arm arm);

}  // namespace futilsim
