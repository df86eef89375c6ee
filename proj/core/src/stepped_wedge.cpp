#include "crtnd/stepped_wedge.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "crtnd/error.hpp"
#include "crtnd/stats.hpp"

namespace crtnd {

std::string_view to_string(SigmaConvention c) noexcept {
  return c == SigmaConvention::canonical ? "canonical" : "printed";
}

std::string_view to_string(SWWeights::Kind k) noexcept {
  switch (k) {
    case SWWeights::Kind::equal: return "equal";
    case SWWeights::Kind::optimal_oracle: return "optimal_oracle";
    case SWWeights::Kind::optimal_plugin: return "optimal_plugin";
    case SWWeights::Kind::file: return "file";
  }
  return "unknown";
}

AssignmentScheme sw_scheme(std::span<const int> start_periods, int periods) {
  std::vector<int> q(static_cast<std::size_t>(periods), 0);
  for (int a : start_periods) {
    require(a >= 1 && a <= periods, ErrorCode::InvalidScheme,
            "start period " + std::to_string(a) + " outside 1.." + std::to_string(periods));
    ++q[static_cast<std::size_t>(a - 1)];
  }
  return AssignmentScheme::stepped_wedge(std::move(q));
}

Eigen::VectorXd sw_period_contrasts(const Eigen::MatrixXd& l, std::span<const int> start_periods,
                                    const std::vector<int>& periods) {
  require(static_cast<std::size_t>(l.rows()) == start_periods.size(), ErrorCode::DimensionMismatch,
          "panel rows differ from the number of start periods");
  Eigen::VectorXd out(static_cast<Eigen::Index>(periods.size()));
  for (std::size_t k = 0; k < periods.size(); ++k) {
    const int t = periods[k];
    double s1 = 0.0, s0 = 0.0;
    int n1 = 0, n0 = 0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
      if (treated_at(start_periods[static_cast<std::size_t>(i)], t)) {
        s1 += l(i, t - 1);
        ++n1;
      } else {
        s0 += l(i, t - 1);
        ++n0;
      }
    }
    if (!(n1 > 0 && n0 > 0)) fail(ErrorCode::ArmTooSmall, "period " + std::to_string(t) + " has an empty group");
    out(static_cast<Eigen::Index>(k)) = s1 / n1 - s0 / n0;
  }
  return out;
}

double sw_point_estimate(const Eigen::MatrixXd& l, std::span<const int> start_periods, const std::vector<int>& periods,
                         const Eigen::VectorXd& w) {
  require(w.size() == static_cast<Eigen::Index>(periods.size()), ErrorCode::DimensionMismatch,
          "weight vector length differs from the number of analysis periods");
  return w.dot(sw_period_contrasts(l, start_periods, periods));
}

namespace {

std::vector<int> group_sizes(const AssignmentScheme& scheme, const std::vector<int>& periods) {
  const auto m_t = scheme.treated_by_period();
  std::vector<int> out;
  for (int t : periods) out.push_back(m_t[static_cast<std::size_t>(t - 1)]);
  return out;
}

double column_covariance(const Eigen::MatrixXd& l, const std::vector<Eigen::Index>& rows, int t1, int t2) {
  std::vector<double> a;
  std::vector<double> b;
  for (auto i : rows) {
    a.push_back(l(i, t1 - 1));
    b.push_back(l(i, t2 - 1));
  }
  return stats::sample_covariance(a, b);
}

}  // namespace

SWCovariance sw_covariance_oracle(const Eigen::MatrixXd& l0, const AssignmentScheme& scheme) {
  require(scheme.kind() == AssignmentScheme::Kind::stepped_wedge, ErrorCode::InvalidScheme,
          "stepped-wedge covariance needs a stepped-wedge scheme");
  require(l0.rows() == scheme.clusters() && l0.cols() == scheme.periods(), ErrorCode::DimensionMismatch,
          "L(0) dimensions differ from the scheme");
  SWCovariance out;
  out.provenance = SWCovariance::Provenance::oracle;
  out.periods = scheme.analysis_periods();
  out.group_sizes = group_sizes(scheme, out.periods);
  const auto k = static_cast<Eigen::Index>(out.periods.size());
  const double m = scheme.clusters();
  const Eigen::MatrixXd centred = l0.rowwise() - l0.colwise().mean();
  const Eigen::MatrixXd s_full = centred.transpose() * centred / (m - 1.0);
  out.s_values.resize(k, k);
  out.sigma.resize(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a; b < k; ++b) {
      const double s = s_full(out.periods[a] - 1, out.periods[b] - 1);
      const double v = m / (out.group_sizes[b] * (m - out.group_sizes[a])) * s;
      out.s_values(a, b) = out.s_values(b, a) = s;
      out.sigma(a, b) = out.sigma(b, a) = v;
    }
  }
  return out;
}

SWCovariance sw_covariance_estimate(const Eigen::MatrixXd& l, std::span<const int> start_periods,
                                    SigmaConvention convention) {
  const auto scheme = sw_scheme(start_periods, static_cast<int>(l.cols()));
  require(static_cast<std::size_t>(l.rows()) == start_periods.size(), ErrorCode::DimensionMismatch,
          "panel rows differ from the number of start periods");
  SWCovariance out;
  out.provenance = SWCovariance::Provenance::estimated;
  out.periods = scheme.analysis_periods();
  out.group_sizes = group_sizes(scheme, out.periods);
  const auto all_m_t = scheme.treated_by_period();
  const auto k = static_cast<Eigen::Index>(out.periods.size());
  const int m = scheme.clusters();
  out.s_values.resize(k, k);
  out.sigma.resize(k, k);

  for (Eigen::Index a = 0; a < k; ++a) {
    const int t1 = out.periods[a];
    for (Eigen::Index b = a; b < k; ++b) {
      const int t2 = out.periods[b];
      // Groups: treated by t1, switching in (t1, t2], untreated through t2.
      std::vector<Eigen::Index> groups[3];
      for (Eigen::Index i = 0; i < l.rows(); ++i) {
        const int s = start_periods[static_cast<std::size_t>(i)];
        groups[s <= t1 ? 0 : (s <= t2 ? 1 : 2)].push_back(i);
      }
      int pick = 0;
      for (int g = 1; g < 3; ++g) {
        if (groups[g].size() > groups[pick].size()) pick = g;
      }
      static constexpr const char* kGroupNames[3] = {"treated-by-t1", "switchers", "untreated-through-t2"};
      require(groups[pick].size() >= 2, ErrorCode::GroupTooSmall,
              "covariance (" + std::to_string(t1) + ", " + std::to_string(t2) + "): largest group " + kGroupNames[pick] +
                  " has " + std::to_string(groups[pick].size()) + " cluster(s)");
      const double s_hat = column_covariance(l, groups[pick], t1, t2);
      out.s_values(a, b) = out.s_values(b, a) = s_hat;

      double entry = 0.0;
      if (convention == SigmaConvention::canonical) {
        if (a == b) {
          // Per-arm variances, as in the parallel design.
          const auto& treated = groups[0];
          const auto& control = groups[2];
          require(treated.size() >= 2 && control.size() >= 2, ErrorCode::ArmTooSmall,
                  "period " + std::to_string(t1) + " needs at least 2 clusters per group");
          entry = column_covariance(l, treated, t1, t1) / static_cast<double>(treated.size()) +
                  column_covariance(l, control, t1, t1) / static_cast<double>(control.size());
        } else {
          entry = static_cast<double>(m) / (out.group_sizes[b] * static_cast<double>(m - out.group_sizes[a])) * s_hat;
        }
      } else {
        const int m_prev = t2 >= 2 ? all_m_t[static_cast<std::size_t>(t2 - 2)] : 0;
        require(m_prev > 0, ErrorCode::SingularCovariance,
                "printed convention divides by m_{t2-1} = 0 at t2 = " + std::to_string(t2));
        entry = static_cast<double>(m) / (m_prev * static_cast<double>(m - out.group_sizes[a])) * s_hat;
      }
      out.sigma(a, b) = out.sigma(b, a) = entry;
    }
  }
  return out;
}

SWCovariance sw_covariance_estimate(const Panel& panel, SigmaConvention convention, bool continuity_correction) {
  return sw_covariance_estimate(panel.log_contrasts(continuity_correction), panel.start_periods(), convention);
}

SWCovariance sw_null_covariance(const Panel& panel, double lambda0, bool continuity_correction) {
  require(lambda0 > 0.0, ErrorCode::InvalidArgument, "lambda0 must be positive");
  Eigen::MatrixXd l0 = panel.log_contrasts(continuity_correction);
  const double shift = std::log(lambda0);
  for (Eigen::Index i = 0; i < l0.rows(); ++i) {
    for (Eigen::Index t = 0; t < l0.cols(); ++t) {
      if (treated_at(panel.start_periods()[static_cast<std::size_t>(i)], static_cast<int>(t) + 1)) l0(i, t) -= shift;
    }
  }
  return sw_covariance_oracle(l0, sw_scheme(panel.start_periods(), panel.periods()));
}

SWWeights equal_weights(int n) {
  require(n >= 1, ErrorCode::InvalidArgument, "need at least one analysis period");
  return {Eigen::VectorXd::Constant(n, 1.0 / n), SWWeights::Kind::equal, {}};
}

SWWeights optimal_weights(const SWCovariance& sigma, double max_condition) {
  const auto& s = sigma.sigma;
  require(s.rows() >= 1 && s.rows() == s.cols(), ErrorCode::DimensionMismatch, "covariance must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  require(eig.info() == Eigen::Success, ErrorCode::SingularCovariance, "eigen-decomposition failed");
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  require(lo > 0.0 && hi / lo < max_condition, ErrorCode::SingularCovariance,
          "covariance is not safely invertible (eigenvalues " + std::to_string(lo) + " .. " + std::to_string(hi) + ")");
  const Eigen::VectorXd x = s.llt().solve(Eigen::VectorXd::Ones(s.rows()));
  SWWeights w;
  w.w = x / x.sum();
  w.kind = sigma.provenance == SWCovariance::Provenance::estimated ? SWWeights::Kind::optimal_plugin
                                                                   : SWWeights::Kind::optimal_oracle;
  return w;
}

EstimateReport sw_log_contrast(const Panel& panel, const SWWeights& weights, const SWOptions& options) {
  const auto l = panel.log_contrasts(options.continuity_correction);
  const auto scheme = sw_scheme(panel.start_periods(), panel.periods());
  const auto periods = scheme.analysis_periods();
  require(weights.w.size() == static_cast<Eigen::Index>(periods.size()), ErrorCode::DimensionMismatch,
          "expected " + std::to_string(periods.size()) + " weights (one per analysis period), got " +
              std::to_string(weights.w.size()));
  require(std::fabs(weights.w.sum() - 1.0) < 1e-9, ErrorCode::InvalidArgument, "weights must sum to 1");
  const auto contrasts = sw_period_contrasts(l, panel.start_periods(), periods);
  const auto cov = sw_covariance_estimate(l, panel.start_periods(), options.convention);

  EstimateReport r;
  r.method = Method::sw_log_contrast;
  r.alpha = options.alpha;
  r.log_estimate = weights.w.dot(contrasts);
  const double var = weights.w.dot(cov.sigma * weights.w);
  r.se_log = std::sqrt(std::max(var, 0.0));
  r.ci = normal_interval(r.log_estimate, *r.se_log, options.alpha, true);
  const auto p = normal_p_value(r.log_estimate, 0.0, *r.se_log);
  r.p_value = p.p;
  if (p.degenerate) r.diagnostics.notes.push_back("DegenerateVariance: standard error is zero");
  if (var < 0.0) r.diagnostics.notes.push_back("estimated variance was negative and was truncated at zero");
  r.diagnostics.vectors["weights"] = {weights.w.data(), weights.w.data() + weights.w.size()};
  r.diagnostics.vectors["period_estimates"] = {contrasts.data(), contrasts.data() + contrasts.size()};
  r.diagnostics.vectors["analysis_periods"] = {periods.begin(), periods.end()};
  const int dropped = panel.periods() - 1 - static_cast<int>(periods.size());
  if (dropped > 0) {
    r.diagnostics.notes.push_back(std::to_string(dropped) +
                                  " period(s) before T without both treated and untreated clusters were dropped");
  }
  r.diagnostics.notes.insert(r.diagnostics.notes.end(), weights.notes.begin(), weights.notes.end());
  return r;
}

PermutationResult sw_permutation_test(const Panel& panel, const SWWeights& weights, double lambda0,
                                      const PermutationMode& mode, bool continuity_correction) {
  require(lambda0 > 0.0, ErrorCode::InvalidArgument, "lambda0 must be positive");
  const auto scheme = sw_scheme(panel.start_periods(), panel.periods());
  const auto periods = scheme.analysis_periods();
  Eigen::MatrixXd l0 = panel.log_contrasts(continuity_correction);
  const double shift = std::log(lambda0);
  for (Eigen::Index i = 0; i < l0.rows(); ++i) {
    for (Eigen::Index t = 0; t < l0.cols(); ++t) {
      if (treated_at(panel.start_periods()[static_cast<std::size_t>(i)], static_cast<int>(t) + 1)) l0(i, t) -= shift;
    }
  }
  // Weights sum to 1, so re-adding the effect and subtracting log lambda0 cancel.
  auto stat = [&](std::span<const int> starts) { return sw_point_estimate(l0, starts, periods, weights.w); };
  return permutation_distribution(scheme, panel.start_periods(), stat, mode);
}

}  // namespace crtnd
