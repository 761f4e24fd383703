#include "futilsim/futility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <boost/math/special_functions/beta.hpp>

#include "futilsim/error.hpp"
#include "futilsim/rng.hpp"

namespace futilsim {

namespace {

constexpr int kMaxDepth = 40;
constexpr double kRoundoff = 64.0 * std::numeric_limits<double>::epsilon();

using DoublePolicy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;

double beta_cdf(const ArmPosterior& p, double x) { return boost::math::ibeta(p.alpha, p.beta, x, DoublePolicy()); }
double beta_sf(const ArmPosterior& p, double x) { return boost::math::ibetac(p.alpha, p.beta, x, DoublePolicy()); }
double beta_pdf(const ArmPosterior& p, double x) {
  return boost::math::ibeta_derivative(p.alpha, p.beta, x, DoublePolicy());
}
double beta_quantile(const ArmPosterior& p, double u) {
  try {
    return boost::math::ibeta_inv(p.alpha, p.beta, u, DoublePolicy());
  } catch (const std::exception&) {
    // Boost's root finder can stall deep in the tail of a skewed Beta; the
    // CDF is monotone, so bisection always lands.
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
      const double mid = 0.5 * (lo + hi);
      (beta_cdf(p, mid) < u ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
}

// Mass left outside the integration window on each side.
constexpr double kTailMass = 1e-10;

template <class F>
struct Simpson {
  const F& f;
  bool failed = false;

  double recurse(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    if (!std::isfinite(flm) || !std::isfinite(frm)) {
      failed = true;
      return 0.0;
    }
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    // Converged, or the panel is already resolved to machine precision.
    if (std::abs(delta) <= 15.0 * tol || std::abs(delta) <= kRoundoff * std::abs(left + right)) {
      return left + right + delta / 15.0;
    }
    if (depth >= kMaxDepth) {
      failed = true;
      return left + right + delta / 15.0;
    }
    return recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
  }

  double panel(double a, double b, double tol) {
    const double fa = f(a);
    const double fb = f(b);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if (!std::isfinite(fa) || !std::isfinite(fm) || !std::isfinite(fb)) {
      failed = true;
      return 0.0;
    }
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return recurse(a, b, fa, fm, fb, whole, tol, 0);
  }
};

// Adaptive Simpson over `panels` equal sub-intervals, each with its share
// of the absolute tolerance.
template <class F>
double integrate(const F& f, double a, double b, int panels, double tol) {
  Simpson<F> s{f};
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double lo = a + i * h;
    const double hi = i + 1 == panels ? b : lo + h;
    total += s.panel(lo, hi, tol / panels);
  }
  if (s.failed) throw Error(ErrorCode::QuadratureFailure, "adaptive Simpson hit the depth limit");
  return total;
}

double beta_sd(const ArmPosterior& p) {
  const double s = p.alpha + p.beta;
  return std::sqrt(p.alpha * p.beta / (s * s * (s + 1.0)));
}

void check_posterior(const ArmPosterior& p) {
  if (!(p.alpha > 0.0 && p.beta > 0.0) || !std::isfinite(p.alpha) || !std::isfinite(p.beta)) {
    throw Error(ErrorCode::InvalidArgument, "Beta parameters must be positive and finite");
  }
}

}  // namespace

ArmPosterior beta_posterior(double mean, double n_effective, const BetaPrior& prior) {
  if (!(mean >= 0.0 && mean <= 1.0)) throw Error(ErrorCode::InvalidArgument, "mean must lie in [0, 1]");
  if (!(n_effective >= 0.0)) throw Error(ErrorCode::InvalidArgument, "effective n must be >= 0");
  return {prior.alpha + mean * n_effective, prior.beta + (1.0 - mean) * n_effective};
}

ArmPosterior beta_posterior_from_counts(double successes, double n, const BetaPrior& prior) {
  if (!(successes >= 0.0 && successes <= n)) throw Error(ErrorCode::InvalidArgument, "successes must lie in [0, n]");
  return {prior.alpha + successes, prior.beta + (n - successes)};
}

double posterior_prob_effect_exceeds(const ArmPosterior& treat, const ArmPosterior& ctrl, double delta) {
  check_posterior(treat);
  check_posterior(ctrl);
  if (delta >= 1.0) return 0.0;
  if (delta <= -1.0) return 1.0;

  const auto survival_t = [&](double y) {
    if (y <= 0.0) return 1.0;
    if (y >= 1.0) return 0.0;
    return beta_sf(treat, y);
  };

  // For x < -delta the treatment tail is 1, so that piece is F_c(-delta).
  double lo = std::max(0.0, -delta);
  double hi = std::min(1.0, 1.0 - delta);
  double head = lo > 0.0 ? beta_cdf(ctrl, lo) : 0.0;

  // Where the treatment survival is 1 to within kTailMass the integral is a
  // control CDF difference; past the treatment's upper quantile it vanishes.
  const double t_lo = beta_quantile(treat, kTailMass) - delta;
  const double t_hi = beta_quantile(treat, 1.0 - kTailMass) - delta;
  if (t_lo > lo) {
    const double cut = std::min(t_lo, hi);
    head = beta_cdf(ctrl, cut);
    lo = cut;
  }
  hi = std::min(hi, std::max(lo, t_hi));
  if (!(hi > lo)) return std::clamp(head, 0.0, 1.0);

  const double c_lo = std::max(lo, beta_quantile(ctrl, kTailMass));
  const double c_hi = std::min(hi, beta_quantile(ctrl, 1.0 - kTailMass));
  if (c_lo > lo) head += beta_cdf(ctrl, c_lo) - beta_cdf(ctrl, lo);
  if (!(c_hi > c_lo)) return std::clamp(head, 0.0, 1.0);

  const auto integrand = [&](double x) { return beta_pdf(ctrl, x) * survival_t(x + delta); };
  const double beta_fn = boost::math::beta(ctrl.alpha, ctrl.beta, DoublePolicy());
  // An unbounded control density is integrated after x = s^(1/alpha) near 0
  // or x = 1 - s^(1/beta) near 1, which makes the integrand bounded.
  const auto near_zero = [&](double a, double b) {
    const double m = 1.0 / ctrl.alpha;
    const auto g = [&](double s) {
      if (s <= 0.0) return m / beta_fn * survival_t(delta);
      return integrand(std::pow(s, m)) * m * std::pow(s, m - 1.0);
    };
    return integrate(g, std::pow(a, ctrl.alpha), std::pow(b, ctrl.alpha), 16, 0.5 * kQuadratureTolerance);
  };
  const auto near_one = [&](double a, double b) {
    const double m = 1.0 / ctrl.beta;
    const auto g = [&](double s) {
      if (s <= 0.0) return m / beta_fn * survival_t(1.0 + delta);
      return integrand(1.0 - std::pow(s, m)) * m * std::pow(s, m - 1.0);
    };
    return integrate(g, std::pow(1.0 - b, ctrl.beta), std::pow(1.0 - a, ctrl.beta), 16, 0.5 * kQuadratureTolerance);
  };

  double body = 0.0;
  if (ctrl.alpha >= 1.0 && ctrl.beta >= 1.0) {
    const int panels = std::clamp(static_cast<int>(std::ceil((c_hi - c_lo) / std::min(beta_sd(ctrl), beta_sd(treat)))), 4, 4096);
    body = integrate(integrand, c_lo, c_hi, panels, kQuadratureTolerance);
  } else if (ctrl.beta >= 1.0) {
    body = near_zero(c_lo, c_hi);
  } else if (ctrl.alpha >= 1.0) {
    body = near_one(c_lo, c_hi);
  } else {
    const double mid = std::clamp(0.5, c_lo, c_hi);
    if (mid > c_lo) body += near_zero(c_lo, mid);
    if (c_hi > mid) body += near_one(mid, c_hi);
  }
  return std::clamp(head + body, 0.0, 1.0);
}

Decision decide(double statistic, const FutilityRuleSpec& rule) {
  return {statistic < rule.futility_cut, statistic, rule};
}

Decision evaluate_posterior_rule(const ArmSummary& treat, const ArmSummary& ctrl, const FutilityRuleSpec& rule) {
  validate_rule(rule);
  if (rule.kind != RuleKind::PosteriorProb) {
    throw Error(ErrorCode::InvalidArgument, "evaluate_posterior_rule needs a posterior-probability rule");
  }
  const ArmPosterior t = beta_posterior(treat.mean, treat.n, rule.prior);
  const ArmPosterior c = beta_posterior(ctrl.mean, ctrl.n, rule.prior);
  return decide(posterior_prob_effect_exceeds(t, c, rule.effect_threshold_delta), rule);
}

Decision predictive_probability(const PredictiveArm& treat, const PredictiveArm& ctrl,
                                std::array<int, 2> remaining, std::span<const double> planned_props,
                                const FutilityRuleSpec& rule, std::uint64_t seed) {
  validate_rule(rule);
  if (rule.kind != RuleKind::PredictiveProb) {
    throw Error(ErrorCode::InvalidArgument, "predictive_probability needs a predictive-probability rule");
  }
  if (remaining[0] < 0 || remaining[1] < 0) throw Error(ErrorCode::InvalidArgument, "remaining counts must be >= 0");
  check_posterior(treat.current);
  check_posterior(ctrl.current);
  // Continuous posteriors never put all their mass above delta.
  if (rule.final_success_gamma >= 1.0) return decide(0.0, rule);

  const std::array<const PredictiveArm*, 2> arms{&treat, &ctrl};
  std::array<std::vector<int>, 2> future_counts;
  std::array<std::vector<ArmPosterior>, 2> future_rates;
  for (int a = 0; a < 2; ++a) {
    const auto& strata = arms[a]->strata;
    if (strata.empty()) {
      future_counts[a] = {remaining[a]};
      future_rates[a] = {arms[a]->current};
      continue;
    }
    if (strata.size() != planned_props.size()) {
      throw Error(ErrorCode::LengthMismatch, "planned proportions do not match the stratum counts");
    }
    check_simplex(planned_props, "planned proportions");
    future_counts[a] = largest_remainder(planned_props, remaining[a]);
    for (const auto& s : strata) future_rates[a].push_back(beta_posterior_from_counts(s.successes, s.n, rule.prior));
  }

  Engine eng(child_seed(seed, StreamTag::Predictive, 0));
  std::vector<std::pair<int, int>> draws(static_cast<std::size_t>(rule.pp_draws));
  for (auto& d : draws) {
    std::array<int, 2> x{0, 0};
    for (int a = 0; a < 2; ++a) {
      for (std::size_t k = 0; k < future_counts[a].size(); ++k) {
        if (future_counts[a][k] == 0) continue;
        const double p = beta_draw(eng, future_rates[a][k].alpha, future_rates[a][k].beta);
        x[a] += binomial_draw(eng, future_counts[a][k], p);
      }
    }
    d = {x[0], x[1]};
  }

  const int rt = remaining[0];
  const int rc = remaining[1];
  const auto success = [&](int xt, int xc) {
    const ArmPosterior t{treat.current.alpha + xt, treat.current.beta + (rt - xt)};
    const ArmPosterior c{ctrl.current.alpha + xc, ctrl.current.beta + (rc - xc)};
    return posterior_prob_effect_exceeds(t, c, rule.effect_threshold_delta) >= rule.final_success_gamma;
  };

  // Success is monotone: increasing in the treated count, decreasing in the
  // control count. Cache, per drawn control count, the smallest succeeding
  // treated count clipped to the drawn treated range; thresholds rise with
  // the control count, so each search gallops up from the previous one.
  int min_t = rt + 1;
  int max_t = 0;
  std::map<int, int> threshold;
  for (const auto& d : draws) {
    threshold.emplace(d.second, -1);
    min_t = std::min(min_t, d.first);
    max_t = std::max(max_t, d.first);
  }
  int floor_t = min_t;
  for (auto& [xc, t_star] : threshold) {
    int lo = floor_t;
    int hi = max_t + 1;
    for (int step = 1; lo < hi; step *= 2) {
      const int probe = std::min(lo + step - 1, hi - 1);
      if (success(probe, xc)) {
        hi = probe;
        break;
      }
      lo = probe + 1;
    }
    while (lo < hi) {
      const int mid = lo + (hi - lo) / 2;
      if (success(mid, xc)) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    t_star = lo;
    floor_t = lo;
  }

  int hits = 0;
  for (const auto& d : draws) {
    if (d.first >= threshold[d.second]) ++hits;
  }
  return decide(static_cast<double>(hits) / static_cast<double>(draws.size()), rule);
}

}  // namespace futilsim
