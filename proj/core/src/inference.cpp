#include "crtnd/inference.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "crtnd/error.hpp"
#include "crtnd/rng.hpp"
#include "crtnd/stats.hpp"

namespace crtnd {

NullSpec NullSpec::relative_risk(double lambda0, Adjustment adj) {
  require(lambda0 > 0.0 && std::isfinite(lambda0), ErrorCode::InvalidArgument,
          "relative-risk null needs lambda0 > 0 (got " + std::to_string(lambda0) + ")");
  return {Kind::relative_risk, lambda0, adj};
}

NullSpec NullSpec::dose_response(double beta0, Adjustment adj) {
  require(std::isfinite(beta0), ErrorCode::InvalidArgument, "dose-response null needs a finite beta0");
  return {Kind::dose_response, beta0, adj};
}

double NullSpec::location() const { return kind == Kind::relative_risk ? std::log(value) : value; }

PermutationMode PermutationMode::exact(std::uint64_t cap) {
  PermutationMode m;
  m.kind = Kind::exact;
  m.cap = cap;
  return m;
}

PermutationMode PermutationMode::monte_carlo(std::uint64_t draws, std::uint64_t seed, std::uint64_t stream) {
  require(draws >= 1, ErrorCode::InvalidArgument, "Monte Carlo mode needs at least one draw");
  PermutationMode m;
  m.kind = Kind::monte_carlo;
  m.draws = draws;
  m.seed = seed;
  m.stream = stream;
  return m;
}

std::string_view to_string(Statistic s) noexcept {
  switch (s) {
    case Statistic::difference_in_means: return "difference_in_means";
    case Statistic::odds_ratio: return "odds_ratio";
    case Statistic::tpf: return "tpf";
  }
  return "unknown";
}

namespace {

double tie_tolerance(double observed) { return 1e-10 * (1.0 + std::fabs(observed)); }

// Welford accumulator for the permutation mean and SD.
struct Moments {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double sd() const { return n > 0 ? std::sqrt(m2 / static_cast<double>(n)) : 0.0; }
};

int treated_count(std::span<const int> arm) { return static_cast<int>(std::count(arm.begin(), arm.end(), 1)); }

}  // namespace

std::vector<double> impute_null_outcomes(std::span<const ClusterRecord> data, const NullSpec& null,
                                         bool continuity_correction) {
  validate(data);
  auto l = log_contrasts(data, continuity_correction);
  if (null.kind == NullSpec::Kind::relative_risk) {
    require(null.value > 0.0, ErrorCode::InvalidArgument, "lambda0 must be positive");
    const double shift = std::log(null.value);
    for (std::size_t i = 0; i < l.size(); ++i) l[i] -= data[i].arm * shift;
  } else {
    const auto d = doses_of(data);
    for (std::size_t i = 0; i < l.size(); ++i) l[i] -= null.value * d[i];
  }
  return l;
}

PermutationResult permutation_distribution(const AssignmentScheme& scheme, std::span<const int> observed,
                                           const AssignmentStatistic& statistic, const PermutationMode& mode) {
  require(scheme.in_support(Assignment(observed.begin(), observed.end())), ErrorCode::InvalidArgument,
          "observed assignment is not in the randomization support");
  PermutationResult out;
  out.mode = mode;
  out.observed_stat = statistic(observed);
  const double obs = out.observed_stat;
  const double tol = tie_tolerance(obs);
  std::uint64_t two = 0, left = 0, right = 0;
  Moments moments;
  auto tally = [&](double s) {
    if (std::fabs(s) >= std::fabs(obs) - tol) ++two;
    if (s <= obs + tol) ++left;
    if (s >= obs - tol) ++right;
    moments.add(s);
  };

  if (mode.kind == PermutationMode::Kind::exact) {
    AssignmentEnumerator e(scheme, mode.cap);
    Assignment a;
    while (e.next(a)) tally(statistic(a));
    const auto n = static_cast<double>(moments.n);
    out.null_draws = moments.n;
    out.p_two_sided = static_cast<double>(two) / n;
    out.p_left = static_cast<double>(left) / n;
    out.p_right = static_cast<double>(right) / n;
  } else {
    Rng rng = make_stream(mode.seed, StreamDomain::permutation, mode.stream);
    for (std::uint64_t k = 0; k < mode.draws; ++k) tally(statistic(sample_assignment(scheme, rng)));
    const auto n = static_cast<double>(mode.draws);
    out.null_draws = mode.draws;
    out.p_two_sided = (1.0 + static_cast<double>(two)) / (1.0 + n);
    out.p_left = (1.0 + static_cast<double>(left)) / (1.0 + n);
    out.p_right = (1.0 + static_cast<double>(right)) / (1.0 + n);
  }
  out.null_mean = moments.mean;
  out.null_sd = moments.sd();
  return out;
}

namespace {

inline constexpr int kFastPathMaxClusters = 40;

// Subset sums of one half, bucketed by subset size and sorted.
std::vector<std::vector<double>> subset_sums(std::span<const double> g) {
  const auto h = g.size();
  const std::size_t n = std::size_t{1} << h;
  std::vector<double> sums(n, 0.0);
  std::vector<std::vector<double>> buckets(h + 1);
  buckets[0].push_back(0.0);
  for (std::size_t mask = 1; mask < n; ++mask) {
    const auto low = static_cast<std::size_t>(std::countr_zero(mask));
    sums[mask] = sums[mask & (mask - 1)] + g[low];
    buckets[static_cast<std::size_t>(std::popcount(mask))].push_back(sums[mask]);
  }
  for (auto& b : buckets) std::sort(b.begin(), b.end());
  return buckets;
}

class SubsetSumCounter {
 public:
  SubsetSumCounter(std::span<const double> g, int m1)
      : m1_(m1), first_(subset_sums(g.first(g.size() / 2))), second_(subset_sums(g.subspan(g.size() / 2))) {}

  // Number of size-m1 subsets with sum >= threshold.
  std::uint64_t at_least(double threshold) const {
    std::uint64_t count = 0;
    for_pairs([&](double s1, const std::vector<double>& other) {
      count += static_cast<std::uint64_t>(other.end() - std::lower_bound(other.begin(), other.end(), threshold - s1));
    });
    return count;
  }

  // Number of size-m1 subsets with sum <= threshold.
  std::uint64_t at_most(double threshold) const {
    std::uint64_t count = 0;
    for_pairs([&](double s1, const std::vector<double>& other) {
      count += static_cast<std::uint64_t>(std::upper_bound(other.begin(), other.end(), threshold - s1) - other.begin());
    });
    return count;
  }

 private:
  template <typename F>
  void for_pairs(F&& f) const {
    const int h1 = static_cast<int>(first_.size()) - 1;
    const int h2 = static_cast<int>(second_.size()) - 1;
    for (int k = std::max(0, m1_ - h2); k <= std::min(h1, m1_); ++k) {
      const auto& other = second_[static_cast<std::size_t>(m1_ - k)];
      for (double s1 : first_[static_cast<std::size_t>(k)]) f(s1, other);
    }
  }

  int m1_;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
};

}  // namespace

PermutationResult linear_permutation_exact(std::span<const double> g, double offset, std::span<const int> observed,
                                           std::uint64_t cap) {
  const int m = static_cast<int>(g.size());
  require(observed.size() == g.size(), ErrorCode::DimensionMismatch, "weights and assignment differ in length");
  require(m <= kFastPathMaxClusters, ErrorCode::InvalidArgument, "subset-sum counting supports at most 40 clusters");
  const int m1 = treated_count(observed);
  const auto scheme = AssignmentScheme::parallel(m, m1);
  const auto total = scheme.total_assignments();
  require(total && *total <= cap, ErrorCode::SupportTooLarge,
          "support exceeds the enumeration cap of " + std::to_string(cap) + "; use Monte Carlo mode");

  PermutationResult out;
  out.mode = PermutationMode::exact(cap);
  out.fast_path = true;
  out.null_draws = *total;
  stats::CompensatedSum s;
  for (int i = 0; i < m; ++i) {
    if (observed[static_cast<std::size_t>(i)] == 1) s.add(g[static_cast<std::size_t>(i)]);
  }
  const double obs = s.value() - offset;
  out.observed_stat = obs;
  const double tol = tie_tolerance(obs);

  const SubsetSumCounter counter(g, m1);
  const double n = static_cast<double>(*total);
  const double k = std::fabs(obs) - tol;
  const std::uint64_t two = k <= 0.0 ? *total : counter.at_least(offset + k) + counter.at_most(offset - k);
  out.p_two_sided = std::min(1.0, static_cast<double>(two) / n);
  out.p_left = static_cast<double>(counter.at_most(offset + obs + tol)) / n;
  out.p_right = static_cast<double>(counter.at_least(offset + obs - tol)) / n;

  // Moments of a without-replacement sample sum of size m1.
  const double gbar = stats::mean(g);
  out.null_mean = m1 * gbar - offset;
  const double s2 = m >= 2 ? stats::sample_variance(g) : 0.0;
  out.null_sd = std::sqrt(static_cast<double>(m1) * (m - m1) / m * s2);
  return out;
}

namespace {

// Linear statistics sum_{treated} g - offset, with a generic evaluator for
// the enumeration / Monte Carlo route.
struct LinearStatistic {
  std::vector<double> g;
  double offset = 0.0;

  double operator()(std::span<const int> a) const {
    stats::CompensatedSum s;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (a[i] == 1) s.add(g[i]);
    }
    return s.value() - offset;
  }
};

PermutationResult run_linear(const LinearStatistic& stat, std::span<const int> arm, const PermutationMode& mode) {
  const int m = static_cast<int>(arm.size());
  if (mode.kind == PermutationMode::Kind::exact && mode.allow_fast_path && m <= kFastPathMaxClusters) {
    auto r = linear_permutation_exact(stat.g, stat.offset, arm, mode.cap);
    r.mode = mode;
    return r;
  }
  const auto scheme = AssignmentScheme::parallel(m, treated_count(arm));
  return permutation_distribution(scheme, arm, stat, mode);
}

// Difference in means of v written as a linear statistic.
LinearStatistic difference_in_means_statistic(std::span<const double> v, int m1) {
  const int m = static_cast<int>(v.size());
  const int m0 = m - m1;
  LinearStatistic s;
  s.g.resize(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    s.g[i] = v[i] * (1.0 / m1 + 1.0 / m0);
    total += v[i];
  }
  s.offset = total / m0;
  return s;
}

}  // namespace

PermutationResult permutation_test(std::span<const ClusterRecord> data, const NullSpec& null, Statistic statistic,
                                   const PermutationMode& mode, bool continuity_correction) {
  validate(data);
  const auto arm = arms_of(data);
  const int m = static_cast<int>(arm.size());
  const int m1 = treated_count(arm);
  const auto scheme = AssignmentScheme::parallel(m, m1);
  const int m0 = m - m1;

  switch (statistic) {
    case Statistic::difference_in_means: {
      const auto l0 = impute_null_outcomes(data, null, continuity_correction);
      if (null.adjustment == NullSpec::Adjustment::none) {
        return run_linear(difference_in_means_statistic(l0, m1), arm, mode);
      }
      // Per-arm slopes of L* = L0 + A* theta0 equal those of L0, so the
      // permuted adjusted estimate minus theta0 is the adjusted contrast of L0.
      const auto x = covariates_of(data);
      auto stat = [&](std::span<const int> a) { return adjusted_contrast(l0, x, a).estimate; };
      return permutation_distribution(scheme, arm, stat, mode);
    }
    case Statistic::odds_ratio: {
      require(null.kind == NullSpec::Kind::relative_risk, ErrorCode::InvalidArgument,
              "the odds-ratio statistic tests relative-risk nulls only");
      const double lambda0 = null.value;
      const double shift = std::log(lambda0);
      std::vector<double> y0(data.size());
      std::vector<double> z(data.size());
      const double cc = continuity_correction ? 0.5 : 0.0;
      for (std::size_t i = 0; i < data.size(); ++i) {
        y0[i] = (data[i].y_count + cc) / (arm[i] == 1 ? lambda0 : 1.0);
        z[i] = data[i].z_count + cc;
      }
      std::vector<double> y(data.size());
      auto stat = [&](std::span<const int> a) {
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] == 1 ? y0[i] * lambda0 : y0[i];
        try {
          return log_odds_ratio(y, z, a) - shift;
        } catch (const Error& e) {
          fail(ErrorCode::StatisticUndefined, std::string("odds ratio undefined under a permuted assignment: ") + e.what());
        }
      };
      return permutation_distribution(scheme, arm, stat, mode);
    }
    case Statistic::tpf: {
      require(null.kind == NullSpec::Kind::relative_risk, ErrorCode::InvalidArgument,
              "the test-positive fraction statistic tests relative-risk nulls only");
      const double lambda0 = null.value;
      LinearStatistic s;
      s.g.resize(data.size());
      double sum_f0 = 0.0;
      double sum_f1 = 0.0;
      for (std::size_t i = 0; i < data.size(); ++i) {
        const double y = data[i].y_count;
        const double z = data[i].z_count;
        if (!(y + z > 0.0)) fail(ErrorCode::EmptyCluster, "cluster " + data[i].cluster_id + " has no cases");
        // Counts imputed under the null; a common ascertainment factor cancels.
        const double y0 = arm[i] == 1 ? y / lambda0 : y;
        const double f0 = y0 / (y0 + z);
        const double f1 = lambda0 * y0 / (lambda0 * y0 + z);
        s.g[i] = f1 / m1 + f0 / m0;
        sum_f0 += f0;
        sum_f1 += f1;
      }
      const double permutation_mean = (sum_f1 - sum_f0) / m;
      s.offset = sum_f0 / m0 + permutation_mean;
      return run_linear(s, arm, mode);
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown statistic");
}

EstimateReport normal_test(std::span<const ClusterRecord> data, const NullSpec& null, Method method, double alpha,
                           bool continuity_correction) {
  EstimatorOptions opts{continuity_correction, alpha};
  EstimateReport r;
  double statistic = 0.0;
  double se = 0.0;
  switch (method) {
    case Method::log_contrast:
    case Method::covariate_adjusted:
      require(null.kind == NullSpec::Kind::relative_risk, ErrorCode::InvalidArgument,
              "relative-risk methods need a relative-risk null");
      r = method == Method::log_contrast ? log_contrast_estimate(data, opts)
                                         : covariate_adjusted_estimate(data, std::nullopt, opts).first;
      statistic = r.log_estimate - null.location();
      se = *r.se_log;
      break;
    case Method::dose_response: {
      require(null.kind == NullSpec::Kind::dose_response, ErrorCode::InvalidArgument,
              "dose-response testing needs a dose-response null");
      DoseResponseOptions d;
      d.alpha = alpha;
      d.adjust_covariates = null.adjustment == NullSpec::Adjustment::covariates;
      d.continuity_correction = continuity_correction;
      r = dose_response_estimate(data, d);
      const auto l = log_contrasts(data, continuity_correction);
      const auto ds = dose_statistic(l, doses_of(data), arms_of(data), covariates_of(data), null.value,
                                     d.adjust_covariates);
      statistic = ds.value;
      se = ds.se;
      break;
    }
    default:
      fail(ErrorCode::InvalidArgument, std::string("no Normal test for method ") + std::string(to_string(method)));
  }
  const auto p = normal_p_value(statistic, 0.0, se);
  r.p_value = p.p;
  r.diagnostics.values["null_value"] = null.value;
  r.diagnostics.values["z"] = p.z;
  if (p.degenerate) {
    r.diagnostics.values["degenerate_variance"] = 1.0;
    r.diagnostics.notes.push_back("DegenerateVariance: standard error is zero");
  }
  return r;
}

double odds_ratio_permutation_se(std::span<const ClusterRecord> data, const PermutationMode& mode,
                                 bool continuity_correction) {
  const auto est = odds_ratio_estimate(data, {continuity_correction, 0.05});
  const auto res = permutation_test(data, NullSpec::relative_risk(std::exp(est.log_estimate)), Statistic::odds_ratio,
                                    mode, continuity_correction);
  return res.null_sd;
}

}  // namespace crtnd
