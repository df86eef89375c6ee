#include <algorithm>
#include <cmath>
#include <limits>

#include "crtnd/error.hpp"
#include "crtnd/inference.hpp"
#include "crtnd/stats.hpp"

namespace crtnd {

DoseStatistic dose_statistic(std::span<const double> l, std::span<const double> dose, std::span<const int> arm,
                             const Eigen::MatrixXd& x, double beta0, bool adjust_covariates) {
  require(l.size() == dose.size(), ErrorCode::DimensionMismatch, "log-contrasts and doses differ in length");
  std::vector<double> l0(l.size());
  for (std::size_t i = 0; i < l.size(); ++i) l0[i] = l[i] - beta0 * dose[i];
  if (adjust_covariates) {
    const auto adj = adjusted_contrast(l0, x, arm);
    return {adj.estimate, std::sqrt(adj.variance)};
  }
  return {mean_difference(l0, arm), std::sqrt(neyman_variance(l0, arm))};
}

double dose_response_p_value(std::span<const ClusterRecord> data, double beta0, const DoseResponseOptions& options) {
  const auto adj = options.adjust_covariates ? NullSpec::Adjustment::covariates : NullSpec::Adjustment::none;
  if (options.test == InversionTest::permutation) {
    return permutation_test(data, NullSpec::dose_response(beta0, adj), Statistic::difference_in_means, options.mode,
                            options.continuity_correction)
        .p_two_sided;
  }
  const auto l = log_contrasts(data, options.continuity_correction);
  const auto ds = dose_statistic(l, doses_of(data), arms_of(data), covariates_of(data), beta0,
                                 options.adjust_covariates);
  return normal_p_value(ds.value, 0.0, ds.se).p;
}

namespace {

// Solution set of a beta^2 + b beta + c <= 0.
struct QuadraticSet {
  Interval interval;
  bool bounded = true;
};

QuadraticSet quadratic_nonpositive(double a, double b, double c, double center) {
  const double inf = std::numeric_limits<double>::infinity();
  const double scale = std::max({std::fabs(a), std::fabs(b), std::fabs(c)});
  if (a <= 1e-14 * scale) return {{-inf, inf}, false};
  const double disc = b * b - 4.0 * a * c;
  if (disc <= 0.0) return {{center, center}, true};
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  double r1 = q / a;
  double r2 = q != 0.0 ? c / q : -r1;
  if (r1 > r2) std::swap(r1, r2);
  return {{r1, r2}, true};
}

}  // namespace

EstimateReport dose_response_estimate(std::span<const ClusterRecord> data, const DoseResponseOptions& options) {
  validate(data);
  require(options.alpha > 0.0 && options.alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  const auto dose = doses_of(data);
  const auto [dmin, dmax] = std::minmax_element(dose.begin(), dose.end());
  require(*dmax - *dmin > 0.0, ErrorCode::ConstantDose, "dose is constant across clusters; the instrument has no bite");
  const auto l = log_contrasts(data, options.continuity_correction);
  const auto arm = arms_of(data);
  const auto x = covariates_of(data);
  auto stat = [&](double beta0) { return dose_statistic(l, dose, arm, x, beta0, options.adjust_covariates); };

  // N(beta0) is linear in beta0 and its p-value peaks at 1 where N = 0.
  const auto n0 = stat(0.0);
  const auto n1 = stat(1.0);
  const double slope = n0.value - n1.value;
  require(std::fabs(slope) > 1e-12 * (1.0 + std::fabs(n0.value)), ErrorCode::StatisticUndefined,
          "mean dose does not differ between randomized arms");
  const double beta_hat = n0.value / slope;
  const auto at_hat = stat(beta_hat);

  EstimateReport r;
  r.method = Method::dose_response;
  r.alpha = options.alpha;
  r.log_estimate = beta_hat;
  r.se_log = at_hat.se / std::fabs(slope);
  r.ci_method = CiMethod::test_inversion;
  r.diagnostics.values["dose_min"] = *dmin;
  r.diagnostics.values["dose_max"] = *dmax;
  r.diagnostics.values["dose_contrast"] = slope;
  r.diagnostics.values["p_at_estimate"] = dose_response_p_value(data, beta_hat, options);
  r.diagnostics.notes.push_back("slope describes the dose-response within the observed dose range [" +
                                std::to_string(*dmin) + ", " + std::to_string(*dmax) + "]");

  if (options.test == InversionTest::normal) {
    // Acceptance region {beta : N(beta)^2 <= z^2 Var(beta)} with Var quadratic in beta.
    const double z = stats::normal_quantile(1.0 - options.alpha / 2.0);
    const double vm = std::pow(stat(-1.0).se, 2);
    const double v0 = n0.se * n0.se;
    const double vp = n1.se * n1.se;
    const double va = 0.5 * (vp + vm) - v0;
    const double vb = 0.5 * (vp - vm);
    const auto set = quadratic_nonpositive(slope * slope - z * z * va, -2.0 * n0.value * slope - z * z * vb,
                                           n0.value * n0.value - z * z * v0, beta_hat);
    r.ci = set.interval;
    if (!set.bounded) r.diagnostics.notes.push_back("confidence set is unbounded (weak instrument)");
    r.p_value = normal_p_value(n0.value, 0.0, n0.se).p;
  } else {
    auto p = [&](double beta0) { return dose_response_p_value(data, beta0, options); };
    double scale = *r.se_log;
    if (!(scale > 0.0)) {
      scale = 0.1;
      r.diagnostics.notes.push_back("zero dispersion; search scale set to 0.1");
    }
    const auto inv = invert_pvalue(p, beta_hat, scale, options.alpha, options.inversion);
    r.ci = inv.interval;
    r.diagnostics.notes.insert(r.diagnostics.notes.end(), inv.notes.begin(), inv.notes.end());
    r.diagnostics.values["inversion_evaluations"] = inv.evaluations;
    r.p_value = p(0.0);
  }
  if (!(n0.se > 0.0) || !(at_hat.se > 0.0)) {
    r.diagnostics.values["degenerate_variance"] = 1.0;
    r.diagnostics.notes.push_back("DegenerateVariance: residual variance is zero");
  }
  return r;
}

}  // namespace crtnd
