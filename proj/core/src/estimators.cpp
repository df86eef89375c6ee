#include "crtnd/estimators.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "crtnd/error.hpp"
#include "crtnd/stats.hpp"

namespace crtnd {

// ---------------------------------------------------------------------------
// report.hpp

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::odds_ratio: return "odds_ratio";
    case Method::tpf: return "tpf";
    case Method::log_contrast: return "log_contrast";
    case Method::covariate_adjusted: return "covariate_adjusted";
    case Method::dose_response: return "dose_response";
    case Method::sw_log_contrast: return "sw_log_contrast";
  }
  return "unknown";
}

std::string_view to_string(CiMethod m) noexcept {
  switch (m) {
    case CiMethod::normal: return "normal";
    case CiMethod::test_inversion: return "test_inversion";
    case CiMethod::permutation: return "permutation";
  }
  return "unknown";
}

double EstimateReport::natural_estimate() const {
  return lambda_scale() ? std::exp(log_estimate) : log_estimate;
}

Interval normal_interval(double log_estimate, double se, double alpha, bool lambda_scale) {
  const double z = stats::normal_quantile(1.0 - alpha / 2.0);
  Interval ci{log_estimate - z * se, log_estimate + z * se};
  if (lambda_scale) ci = {std::exp(ci.low), std::exp(ci.high)};
  return ci;
}

NormalPValue normal_p_value(double estimate, double null_value, double se) {
  NormalPValue out;
  const double diff = estimate - null_value;
  if (!(se > 0.0)) {
    out.degenerate = true;
    const bool match = std::fabs(diff) <= 1e-12 * (1.0 + std::fabs(estimate) + std::fabs(null_value));
    out.z = match ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    out.p = match ? 1.0 : 0.0;
    return out;
  }
  out.z = diff / se;
  out.p = stats::normal_two_sided_p(out.z);
  return out;
}

// ---------------------------------------------------------------------------
// Kernels

namespace {

struct ArmCounts {
  int treated = 0;
  int control = 0;
};

ArmCounts count_arms(std::span<const int> arm) {
  ArmCounts c;
  for (int a : arm) (a == 1 ? c.treated : c.control)++;
  return c;
}

void split_by_arm(std::span<const double> values, std::span<const int> arm, std::vector<double>& treated,
                  std::vector<double>& control) {
  treated.clear();
  control.clear();
  for (std::size_t i = 0; i < values.size(); ++i) (arm[i] == 1 ? treated : control).push_back(values[i]);
}

void check_lengths(std::size_t n, std::span<const int> arm) {
  require(arm.size() == n, ErrorCode::DimensionMismatch, "values and arm indicators differ in length");
}

}  // namespace

double mean_difference(std::span<const double> values, std::span<const int> arm) {
  check_lengths(values.size(), arm);
  stats::CompensatedSum s1;
  stats::CompensatedSum s0;
  for (std::size_t i = 0; i < values.size(); ++i) (arm[i] == 1 ? s1 : s0).add(values[i]);
  require(s1.count() > 0 && s0.count() > 0, ErrorCode::ArmTooSmall, "both arms must be nonempty");
  return s1.value() / static_cast<double>(s1.count()) - s0.value() / static_cast<double>(s0.count());
}

Eigen::VectorXd mean_difference(const Eigen::MatrixXd& x, std::span<const int> arm) {
  check_lengths(static_cast<std::size_t>(x.rows()), arm);
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(x.cols());
  Eigen::VectorXd s0 = Eigen::VectorXd::Zero(x.cols());
  const auto n = count_arms(arm);
  require(n.treated > 0 && n.control > 0, ErrorCode::ArmTooSmall, "both arms must be nonempty");
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (arm[i] == 1) {
      s1 += x.row(i).transpose();
    } else {
      s0 += x.row(i).transpose();
    }
  }
  return s1 / n.treated - s0 / n.control;
}

double neyman_variance(std::span<const double> values, std::span<const int> arm) {
  check_lengths(values.size(), arm);
  const auto n = count_arms(arm);
  require(n.treated >= 2 && n.control >= 2, ErrorCode::ArmTooSmall,
          "variance estimation needs at least 2 clusters per arm (treated=" + std::to_string(n.treated) +
              ", control=" + std::to_string(n.control) + ")");
  std::vector<double> t;
  std::vector<double> c;
  split_by_arm(values, arm, t, c);
  return stats::sample_variance(t) / n.treated + stats::sample_variance(c) / n.control;
}

double log_odds_ratio(std::span<const double> y, std::span<const double> z, std::span<const int> arm) {
  check_lengths(y.size(), arm);
  check_lengths(z.size(), arm);
  double y1 = 0.0, y0 = 0.0, z1 = 0.0, z0 = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (arm[i] == 1) {
      y1 += y[i];
      z1 += z[i];
    } else {
      y0 += y[i];
      z0 += z[i];
    }
  }
  require(y1 > 0.0, ErrorCode::ZeroArmTotal, "treated test-positive total is zero");
  require(y0 > 0.0, ErrorCode::ZeroArmTotal, "control test-positive total is zero");
  require(z1 > 0.0, ErrorCode::ZeroArmTotal, "treated test-negative total is zero");
  require(z0 > 0.0, ErrorCode::ZeroArmTotal, "control test-negative total is zero");
  return (std::log(y1) - std::log(y0)) + (std::log(z0) - std::log(z1));
}

TpfStatistic tpf_statistic(std::span<const double> y, std::span<const double> z, std::span<const int> arm) {
  check_lengths(y.size(), arm);
  check_lengths(z.size(), arm);
  std::vector<double> fraction(y.size());
  double total_y = 0.0;
  double total_z = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] + z[i] > 0.0)) fail(ErrorCode::EmptyCluster, "cluster " + std::to_string(i + 1) + " has no cases");
    fraction[i] = y[i] / (y[i] + z[i]);
    total_y += y[i];
    total_z += z[i];
  }
  require(total_y > 0.0, ErrorCode::ZeroPositiveTotal, "no test-positives in the data");
  return {mean_difference(fraction, arm), total_z / total_y};
}

double tpf_expected(double lambda, double r) {
  return 2.0 * r * (lambda * lambda - 1.0) / (((2.0 + r) * lambda + r) * (r * lambda + 2.0 + r));
}

namespace {

void check_tpf_monotone(double r) {
  // The forward map must be increasing for the root to be unique.
  static const auto grid = [] {
    std::array<double, 121> g{};
    for (int k = -60; k <= 60; ++k) g[static_cast<std::size_t>(k + 60)] = std::pow(10.0, k / 10.0);
    return g;
  }();
  double previous = -std::numeric_limits<double>::infinity();
  for (double lambda : grid) {
    const double value = tpf_expected(lambda, r);
    if (!(value > previous)) {
      fail(ErrorCode::AmbiguousRoot,
           "expected test-positive fraction is not increasing in lambda for r=" + std::to_string(r));
    }
    previous = value;
  }
}

}  // namespace

double tpf_solve(double t, double r) {
  require(r > 0.0 && std::isfinite(r), ErrorCode::InvalidArgument, "tpf_solve needs r > 0");
  const double bound = 2.0 / (2.0 + r);
  if (!(std::isfinite(t) && std::fabs(t) < bound)) {
    fail(ErrorCode::NoAdmissibleRoot, "T=" + std::to_string(t) + " is outside the attainable range (" +
                                          std::to_string(-bound) + ", " + std::to_string(bound) +
                                          ") for r=" + std::to_string(r));
  }
  check_tpf_monotone(r);
  // t ((2+r) l + r)(r l + 2 + r) = 2 r (l^2 - 1), collected in powers of l.
  const double a = t * r * (2.0 + r) - 2.0 * r;
  const double b = t * ((2.0 + r) * (2.0 + r) + r * r);
  const double c = t * r * (2.0 + r) + 2.0 * r;
  const double disc = b * b - 4.0 * a * c;
  require(disc >= 0.0, ErrorCode::NoAdmissibleRoot, "quadratic has no real root");
  const double q = -0.5 * (b + (b >= 0.0 ? 1.0 : -1.0) * std::sqrt(disc));
  const double roots[2] = {q / a, c / q};
  // Inside the attainable range a < 0 < c, so the roots have opposite signs.
  const bool p0 = roots[0] > 0.0;
  const bool p1 = roots[1] > 0.0;
  require(p0 || p1, ErrorCode::NoAdmissibleRoot, "no positive root");
  if (p0 && p1) {
    // Cannot happen when a < 0 < c; keep the root on the side matching sign(t).
    const double pick = (t < 0.0) == (roots[0] < 1.0) ? roots[0] : roots[1];
    require((t < 0.0) == (pick < 1.0) || t == 0.0, ErrorCode::AmbiguousRoot, "two positive roots");
    return pick;
  }
  return p0 ? roots[0] : roots[1];
}

AdjustedContrast adjusted_contrast(std::span<const double> values, const Eigen::MatrixXd& x,
                                   std::span<const int> arm, const std::optional<Eigen::VectorXd>& beta) {
  const auto n = values.size();
  check_lengths(n, arm);
  require(static_cast<std::size_t>(x.rows()) == n, ErrorCode::DimensionMismatch,
          "covariate matrix rows differ from data length");
  const Eigen::Index p = x.cols();
  const auto counts = count_arms(arm);
  AdjustedContrast out;
  const double diff = mean_difference(values, arm);
  const Eigen::VectorXd x_diff = mean_difference(x, arm);

  if (beta) {
    require(beta->size() == p, ErrorCode::DimensionMismatch, "beta length differs from covariate dimension");
    std::vector<double> resid(n);
    for (std::size_t i = 0; i < n; ++i) resid[i] = values[i] - x.row(static_cast<Eigen::Index>(i)).dot(*beta);
    std::vector<double> t;
    std::vector<double> c;
    split_by_arm(resid, arm, t, c);
    require(t.size() >= 2 && c.size() >= 2, ErrorCode::ArmTooSmall,
            "variance estimation needs at least 2 clusters per arm");
    out.fit.beta_hat = *beta;
    out.fit.beta_treated = *beta;
    out.fit.beta_control = *beta;
    out.fit.resid_var_treated = stats::sample_variance(t);
    out.fit.resid_var_control = stats::sample_variance(c);
    out.fit.beta_supplied = true;
  } else {
    require(p > 0, ErrorCode::InvalidArgument, "covariate adjustment needs at least one covariate");
    require(counts.treated >= p + 2 && counts.control >= p + 2, ErrorCode::ArmTooSmall,
            "per-arm regression needs at least p+2 = " + std::to_string(p + 2) + " clusters per arm");
    auto fit_arm = [&](int which, Eigen::VectorXd& slope, double& resid_var) {
      const int rows = which == 1 ? counts.treated : counts.control;
      Eigen::MatrixXd xa(rows, p);
      Eigen::VectorXd la(rows);
      int k = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (arm[i] != which) continue;
        xa.row(k) = x.row(static_cast<Eigen::Index>(i));
        la(k) = values[i];
        ++k;
      }
      // Centering absorbs the intercept.
      const Eigen::RowVectorXd xbar = xa.colwise().mean();
      xa.rowwise() -= xbar;
      la.array() -= la.mean();
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xa);
      require(qr.rank() == p, ErrorCode::RankDeficientCovariates,
              std::string(which == 1 ? "treated" : "control") + "-arm covariates are rank deficient");
      slope = qr.solve(la);
      resid_var = (la - xa * slope).squaredNorm() / static_cast<double>(rows - p - 1);
    };
    fit_arm(1, out.fit.beta_treated, out.fit.resid_var_treated);
    fit_arm(0, out.fit.beta_control, out.fit.resid_var_control);
    const double w1 = static_cast<double>(counts.treated) / static_cast<double>(n);
    const double w0 = static_cast<double>(counts.control) / static_cast<double>(n);
    out.fit.beta_hat = w1 * out.fit.beta_treated + w0 * out.fit.beta_control;
  }
  out.estimate = diff - out.fit.beta_hat.dot(x_diff);
  out.variance = out.fit.resid_var_treated / counts.treated + out.fit.resid_var_control / counts.control;
  return out;
}

Eigen::VectorXd optimal_covariate_coefficients(const Eigen::MatrixXd& x, std::span<const double> control_values) {
  require(static_cast<std::size_t>(x.rows()) == control_values.size(), ErrorCode::DimensionMismatch,
          "covariate rows differ from outcome length");
  require(x.rows() >= 2, ErrorCode::InvalidArgument, "need at least 2 clusters");
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  Eigen::Map<const Eigen::VectorXd> l(control_values.data(), static_cast<Eigen::Index>(control_values.size()));
  const Eigen::VectorXd lc = l.array() - l.mean();
  const double denom = static_cast<double>(x.rows() - 1);
  const Eigen::MatrixXd v = xc.transpose() * xc / denom;
  const Eigen::VectorXd cov = xc.transpose() * lc / denom;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(v);
  require(ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.vectorD().minCoeff() > 0.0,
          ErrorCode::RankDeficientCovariates, "covariate covariance matrix is singular");
  return ldlt.solve(cov);
}

// ---------------------------------------------------------------------------
// Record-level estimators

namespace {

struct Columns {
  std::vector<double> y;
  std::vector<double> z;
  std::vector<int> arm;
};

Columns columns(std::span<const ClusterRecord> data) {
  validate(data);
  Columns c;
  for (const auto& r : data) {
    c.y.push_back(r.y_count);
    c.z.push_back(r.z_count);
    c.arm.push_back(r.arm);
  }
  return c;
}

}  // namespace

EstimateReport odds_ratio_estimate(std::span<const ClusterRecord> data, const EstimatorOptions& options) {
  auto c = columns(data);
  if (options.continuity_correction) {
    for (auto& v : c.y) v += 0.5;
    for (auto& v : c.z) v += 0.5;
  }
  EstimateReport r;
  r.method = Method::odds_ratio;
  r.alpha = options.alpha;
  r.log_estimate = log_odds_ratio(c.y, c.z, c.arm);
  return r;
}

TpfStatistic tpf_statistic(std::span<const ClusterRecord> data) {
  const auto c = columns(data);
  return tpf_statistic(c.y, c.z, c.arm);
}

EstimateReport tpf_estimate(std::span<const ClusterRecord> data, const EstimatorOptions& options) {
  const auto c = columns(data);
  const auto stat = tpf_statistic(c.y, c.z, c.arm);
  EstimateReport r;
  r.method = Method::tpf;
  r.alpha = options.alpha;
  r.log_estimate = std::log(tpf_solve(stat.t, stat.r));
  r.diagnostics.values["T"] = stat.t;
  r.diagnostics.values["r"] = stat.r;
  const auto n = count_arms(c.arm);
  if (n.treated != n.control) {
    r.diagnostics.notes.push_back("unequal allocation: the expected-fraction approximation assumes m = 2*m1");
  }
  return r;
}

EstimateReport log_contrast_estimate(std::span<const ClusterRecord> data, const EstimatorOptions& options) {
  validate(data);
  const auto l = log_contrasts(data, options.continuity_correction);
  const auto arm = arms_of(data);
  const double var = neyman_variance(l, arm);
  EstimateReport r;
  r.method = Method::log_contrast;
  r.alpha = options.alpha;
  r.log_estimate = mean_difference(l, arm);
  r.se_log = std::sqrt(var);
  r.ci = normal_interval(r.log_estimate, *r.se_log, options.alpha, true);
  const auto p = normal_p_value(r.log_estimate, 0.0, *r.se_log);
  r.p_value = p.p;
  if (p.degenerate) r.diagnostics.notes.push_back("degenerate variance: standard error is zero");
  return r;
}

std::pair<EstimateReport, CovariateFit> covariate_adjusted_estimate(std::span<const ClusterRecord> data,
                                                                   const std::optional<Eigen::VectorXd>& beta,
                                                                   const EstimatorOptions& options) {
  validate(data);
  const auto l = log_contrasts(data, options.continuity_correction);
  const auto arm = arms_of(data);
  const auto x = covariates_of(data);
  const auto adj = adjusted_contrast(l, x, arm, beta);
  EstimateReport r;
  r.method = Method::covariate_adjusted;
  r.alpha = options.alpha;
  r.log_estimate = adj.estimate;
  r.se_log = std::sqrt(adj.variance);
  r.ci = normal_interval(r.log_estimate, *r.se_log, options.alpha, true);
  const auto p = normal_p_value(r.log_estimate, 0.0, *r.se_log);
  r.p_value = p.p;
  if (p.degenerate) r.diagnostics.notes.push_back("degenerate variance: standard error is zero");
  r.diagnostics.vectors["beta_hat"] = {adj.fit.beta_hat.data(), adj.fit.beta_hat.data() + adj.fit.beta_hat.size()};
  r.diagnostics.values["resid_var_treated"] = adj.fit.resid_var_treated;
  r.diagnostics.values["resid_var_control"] = adj.fit.resid_var_control;
  if (adj.fit.beta_supplied) r.diagnostics.notes.push_back("beta supplied by caller");
  return {r, adj.fit};
}

}  // namespace crtnd
