#pragma once

#include <optional>
#include <span>
#include <utility>

#include <Eigen/Core>

#include "crtnd/model.hpp"
#include "crtnd/report.hpp"

namespace crtnd {

struct EstimatorOptions {
  bool continuity_correction = false;
  double alpha = 0.05;
};

// ---------------------------------------------------------------------------
// Kernels on plain vectors. `arm` holds 0/1 indicators aligned with the data.

// mean(values | arm = 1) - mean(values | arm = 0)
double mean_difference(std::span<const double> values, std::span<const int> arm);
// Per-arm covariate mean difference, one entry per column of x.
Eigen::VectorXd mean_difference(const Eigen::MatrixXd& x, std::span<const int> arm);
// s1^2/m1 + s0^2/m0 with n-1 denominators; throws ArmTooSmall below 2 per arm.
double neyman_variance(std::span<const double> values, std::span<const int> arm);

double log_odds_ratio(std::span<const double> y, std::span<const double> z, std::span<const int> arm);

struct TpfStatistic {
  double t = 0.0;  // treated minus control mean test-positive fraction
  double r = 0.0;  // pooled test-negative : test-positive ratio
};
TpfStatistic tpf_statistic(std::span<const double> y, std::span<const double> z, std::span<const int> arm);

// Approximate conditional expectation of the test-positive fraction
// statistic at relative risk `lambda` with equal allocation:
//   2 r (lambda^2 - 1) / {((2 + r) lambda + r)(r lambda + 2 + r)}
double tpf_expected(double lambda, double r);
// Inverse of tpf_expected in lambda. The map is increasing on (0, inf) with
// range (-2/(2+r), 2/(2+r)); t outside that range has no admissible root.
double tpf_solve(double t, double r);

struct CovariateFit {
  Eigen::VectorXd beta_hat;  // (m1/m) beta_treated + (m0/m) beta_control, or the supplied beta
  Eigen::VectorXd beta_treated;
  Eigen::VectorXd beta_control;
  double resid_var_treated = 0.0;
  double resid_var_control = 0.0;
  bool beta_supplied = false;
};

struct AdjustedContrast {
  double estimate = 0.0;
  double variance = 0.0;
  CovariateFit fit;
};

// Difference in means of `values` minus beta' (difference in means of x).
// Without `beta`, beta is the arm-size-weighted average of per-arm OLS slopes
// (intercept included) and the variance uses residual variances with n-p-1
// denominators. With `beta`, residuals are values - x beta, denominators n-1.
AdjustedContrast adjusted_contrast(std::span<const double> values, const Eigen::MatrixXd& x,
                                   std::span<const int> arm,
                                   const std::optional<Eigen::VectorXd>& beta = std::nullopt);

// V(X)^{-1} C(X, L(0)) from fully known control log-contrasts.
Eigen::VectorXd optimal_covariate_coefficients(const Eigen::MatrixXd& x, std::span<const double> control_values);

// ---------------------------------------------------------------------------
// Estimators on cluster records.

// Ratio-of-odds estimator. Point estimate only: its standard error comes
// from the permutation distribution (see inference.hpp).
EstimateReport odds_ratio_estimate(std::span<const ClusterRecord> data, const EstimatorOptions& options = {});

TpfStatistic tpf_statistic(std::span<const ClusterRecord> data);
// Point estimate only; intervals come from test inversion.
EstimateReport tpf_estimate(std::span<const ClusterRecord> data, const EstimatorOptions& options = {});

EstimateReport log_contrast_estimate(std::span<const ClusterRecord> data, const EstimatorOptions& options = {});

std::pair<EstimateReport, CovariateFit> covariate_adjusted_estimate(
    std::span<const ClusterRecord> data, const std::optional<Eigen::VectorXd>& beta = std::nullopt,
    const EstimatorOptions& options = {});

// Two-sided Normal p-value for (estimate - null) / se. se == 0 gives 1 when
// the estimate equals the null and 0 otherwise.
struct NormalPValue {
  double z = 0.0;
  double p = 1.0;
  bool degenerate = false;
};
NormalPValue normal_p_value(double estimate, double null_value, double se);

}  // namespace crtnd
