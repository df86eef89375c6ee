#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crtnd/assignment.hpp"
#include "crtnd/estimators.hpp"
#include "crtnd/model.hpp"
#include "crtnd/report.hpp"

namespace crtnd {

struct NullSpec {
  enum class Kind { relative_risk, dose_response };
  enum class Adjustment { none, covariates };

  Kind kind = Kind::relative_risk;
  double value = 1.0;  // lambda0 (> 0) or beta0
  Adjustment adjustment = Adjustment::none;

  static NullSpec relative_risk(double lambda0, Adjustment adj = Adjustment::none);
  static NullSpec dose_response(double beta0, Adjustment adj = Adjustment::none);
  // log lambda0 or beta0: the value subtracted from the statistic's location.
  double location() const;
};

struct PermutationMode {
  enum class Kind { exact, monte_carlo };

  Kind kind = Kind::exact;
  std::uint64_t draws = 10'000;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;  // substream index within StreamDomain::permutation
  std::uint64_t cap = kDefaultEnumerationCap;
  // Statistics linear in the treated-set sum are counted by a meet-in-the-middle
  // subset-sum search instead of enumerating assignments.
  bool allow_fast_path = true;

  static PermutationMode exact(std::uint64_t cap = kDefaultEnumerationCap);
  static PermutationMode monte_carlo(std::uint64_t draws, std::uint64_t seed, std::uint64_t stream = 0);
};

struct PermutationResult {
  double observed_stat = 0.0;
  std::uint64_t null_draws = 0;
  double p_two_sided = 1.0;
  double p_left = 1.0;
  double p_right = 1.0;
  PermutationMode mode;
  bool fast_path = false;
  double null_mean = 0.0;  // mean of the permutation distribution
  double null_sd = 0.0;    // its standard deviation
};

// Permutation statistics on parallel data. Each is centred so that the
// observed value is compared with its null location:
//   difference_in_means: (covariate-adjusted) difference in means of L minus
//                        log lambda0, or of L - beta0 D for dose nulls
//   odds_ratio:          log odds ratio minus log lambda0
//   tpf:                 T minus its exact permutation mean under the null
enum class Statistic { difference_in_means, odds_ratio, tpf };

std::string_view to_string(Statistic s) noexcept;

// L_i(0) under the null: L_i - A_i log lambda0, or L_i - beta0 D_i.
std::vector<double> impute_null_outcomes(std::span<const ClusterRecord> data, const NullSpec& null,
                                         bool continuity_correction = false);

PermutationResult permutation_test(std::span<const ClusterRecord> data, const NullSpec& null, Statistic statistic,
                                   const PermutationMode& mode, bool continuity_correction = false);

// Generic engine: `statistic` maps an assignment to its (centred) value.
// Exact mode enumerates the scheme's support; Monte Carlo mode samples it.
using AssignmentStatistic = std::function<double(std::span<const int>)>;
PermutationResult permutation_distribution(const AssignmentScheme& scheme, std::span<const int> observed,
                                           const AssignmentStatistic& statistic, const PermutationMode& mode);

// Exact test for statistics of the form sum_{i treated} g_i - offset under
// complete randomization with m1 treated, counted without enumeration.
PermutationResult linear_permutation_exact(std::span<const double> g, double offset, std::span<const int> observed,
                                           std::uint64_t cap = kDefaultEnumerationCap);

// Normal-approximation test for log_contrast, covariate_adjusted or
// dose_response. The report carries the method's estimate and se, a Normal CI
// and the two-sided p-value against `null`.
EstimateReport normal_test(std::span<const ClusterRecord> data, const NullSpec& null, Method method,
                           double alpha = 0.05, bool continuity_correction = false);

// Standard error of the log odds ratio: the dispersion of its permutation
// distribution with outcomes imputed under lambda0 = lambda-hat.
double odds_ratio_permutation_se(std::span<const ClusterRecord> data, const PermutationMode& mode,
                                 bool continuity_correction = false);

// ---------------------------------------------------------------------------
// Test inversion

enum class InversionSearch { grid, bisection };

struct InversionOptions {
  InversionSearch search = InversionSearch::bisection;
  int grid_points = 2001;
  double tolerance = 1e-6;
  double initial_width = 10.0;  // in units of `scale`
  double max_width = 50.0;
  int prescan_points = 201;
};

struct InversionResult {
  Interval interval;  // on the parameter scale passed to invert_pvalue
  std::vector<std::string> notes;
  int evaluations = 0;
};

// {theta : p(theta) > alpha} around `center`, searched on center +/- width *
// scale. `center` must not be rejected.
InversionResult invert_pvalue(const std::function<double(double)>& p_value, double center, double scale,
                              double alpha, const InversionOptions& options = {});

enum class InversionTest { normal, permutation };

// Confidence interval for lambda (relative-risk methods) by inverting the
// Normal or permutation test of each method over log lambda0.
InversionResult invert_ci(std::span<const ClusterRecord> data, Method method, double alpha, InversionTest test,
                          const PermutationMode& mode = {}, const InversionOptions& options = {},
                          bool continuity_correction = false);

// ---------------------------------------------------------------------------
// Dose-response

struct DoseResponseOptions {
  double alpha = 0.05;
  bool adjust_covariates = false;
  InversionTest test = InversionTest::normal;
  PermutationMode mode;
  InversionOptions inversion;
  bool continuity_correction = false;
};

// Statistic N(beta0): difference in means (optionally covariate-adjusted)
// of L - beta0 D between randomized arms, with its Neyman standard error.
struct DoseStatistic {
  double value = 0.0;
  double se = 0.0;
};
DoseStatistic dose_statistic(std::span<const double> l, std::span<const double> dose, std::span<const int> arm,
                             const Eigen::MatrixXd& x, double beta0, bool adjust_covariates);

// p-value of H0: beta = beta0 under the selected test.
double dose_response_p_value(std::span<const ClusterRecord> data, double beta0, const DoseResponseOptions& options);

EstimateReport dose_response_estimate(std::span<const ClusterRecord> data, const DoseResponseOptions& options = {});

}  // namespace crtnd
