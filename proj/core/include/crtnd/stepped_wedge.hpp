#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "crtnd/assignment.hpp"
#include "crtnd/inference.hpp"
#include "crtnd/model.hpp"
#include "crtnd/report.hpp"

namespace crtnd {

// Entry scaling of the estimated covariance, for t1 <= t2:
//   canonical  m / (m_{t2} (m - m_{t1})), diagonal from per-arm variances
//   printed    m / (m_{t2-1} (m - m_{t1})) for every entry
enum class SigmaConvention { canonical, printed };

std::string_view to_string(SigmaConvention c) noexcept;

// Covariance of the per-period difference-in-means vector, indexed by the
// analysis periods (t < T with both groups nonempty).
struct SWCovariance {
  enum class Provenance { oracle, estimated, permutation };

  Eigen::MatrixXd sigma;
  Eigen::MatrixXd s_values;
  std::vector<int> periods;      // 1-based analysis periods
  std::vector<int> group_sizes;  // m_t at each analysis period
  Provenance provenance = Provenance::estimated;
};

struct SWWeights {
  enum class Kind { equal, optimal_oracle, optimal_plugin, file };

  Eigen::VectorXd w;
  Kind kind = Kind::equal;
  std::vector<std::string> notes;
};

std::string_view to_string(SWWeights::Kind k) noexcept;

// Scheme implied by a panel's start periods: q_t = #{i : A_i = t}.
AssignmentScheme sw_scheme(std::span<const int> start_periods, int periods);

// Per-period difference in means of L between clusters treated by t
// (A_i <= t) and the rest, one entry per listed period. `l` is m x T.
Eigen::VectorXd sw_period_contrasts(const Eigen::MatrixXd& l, std::span<const int> start_periods,
                                    const std::vector<int>& periods);

// Covariance of sw_period_contrasts over the randomization distribution,
// from fully known control log-contrasts L(0): entry (t1 <= t2) is
// m / (m_{t2} (m - m_{t1})) S_{t1,t2}.
SWCovariance sw_covariance_oracle(const Eigen::MatrixXd& l0, const AssignmentScheme& scheme);

// Plug-in estimate. Off-diagonal S-hat uses the sample covariance within the
// largest of {A <= t1}, {t1 < A <= t2}, {A > t2} (ties in that order).
SWCovariance sw_covariance_estimate(const Eigen::MatrixXd& l, std::span<const int> start_periods,
                                    SigmaConvention convention = SigmaConvention::canonical);
SWCovariance sw_covariance_estimate(const Panel& panel, SigmaConvention convention = SigmaConvention::canonical,
                                    bool continuity_correction = false);

// Exact covariance under H0: lambda = lambda0, from the imputed L(0).
SWCovariance sw_null_covariance(const Panel& panel, double lambda0, bool continuity_correction = false);

SWWeights equal_weights(int n);
// w* = Sigma^{-1} 1 / (1' Sigma^{-1} 1). Throws SingularCovariance unless
// Sigma is positive definite with condition number below max_condition.
SWWeights optimal_weights(const SWCovariance& sigma, double max_condition = 1e10);

struct SWOptions {
  SigmaConvention convention = SigmaConvention::canonical;
  double alpha = 0.05;
  bool continuity_correction = false;
};

// sum_t w_t (per-period difference in means); SE sqrt(w' Sigma-hat w).
EstimateReport sw_log_contrast(const Panel& panel, const SWWeights& weights, const SWOptions& options = {});

// Weighted estimate without variance estimation.
double sw_point_estimate(const Eigen::MatrixXd& l, std::span<const int> start_periods, const std::vector<int>& periods,
                         const Eigen::VectorXd& w);

// Permutation test of H0: lambda = lambda0 with the weighted statistic,
// over staggered assignments with the panel's q.
PermutationResult sw_permutation_test(const Panel& panel, const SWWeights& weights, double lambda0,
                                      const PermutationMode& mode, bool continuity_correction = false);

}  // namespace crtnd
