#include <algorithm>
#include <cmath>

#include "crtnd/error.hpp"
#include "crtnd/inference.hpp"

namespace crtnd {

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (n - 1);
  return out;
}

struct Scan {
  std::vector<double> theta;
  std::vector<bool> accepted;
  int first = -1;
  int last = -1;
  bool contiguous = true;
};

Scan scan(const std::function<double(double)>& p, double lo, double hi, int n, double alpha) {
  Scan s;
  s.theta = linspace(lo, hi, n);
  s.accepted.resize(s.theta.size());
  for (int k = 0; k < n; ++k) {
    s.accepted[static_cast<std::size_t>(k)] = p(s.theta[static_cast<std::size_t>(k)]) > alpha;
    if (s.accepted[static_cast<std::size_t>(k)]) {
      if (s.first < 0) s.first = k;
      if (s.last >= 0 && s.last != k - 1) s.contiguous = false;
      s.last = k;
    }
  }
  return s;
}

// Shrinks [accepted, rejected] until it is narrower than tol; returns the
// accepted end.
double bisect(const std::function<double(double)>& p, double accepted, double rejected, double alpha, double tol) {
  while (std::fabs(rejected - accepted) > tol) {
    const double mid = 0.5 * (accepted + rejected);
    if (p(mid) > alpha) {
      accepted = mid;
    } else {
      rejected = mid;
    }
  }
  return accepted;
}

}  // namespace

InversionResult invert_pvalue(const std::function<double(double)>& p_value, double center, double scale,
                              double alpha, const InversionOptions& options) {
  require(std::isfinite(center), ErrorCode::InvalidArgument, "inversion centre must be finite");
  require(scale > 0.0 && std::isfinite(scale), ErrorCode::InvalidArgument, "inversion scale must be positive");
  require(options.grid_points >= 3 && options.prescan_points >= 3, ErrorCode::InvalidArgument,
          "inversion grids need at least 3 points");
  InversionResult out;
  auto p = [&](double theta) {
    ++out.evaluations;
    return p_value(theta);
  };
  require(p(center) > alpha, ErrorCode::NoNonRejectedPoint,
          "the point estimate itself is rejected at alpha=" + std::to_string(alpha));

  double width = options.initial_width * scale;
  const double max_width = options.max_width * scale;
  bool lower_open = true;
  bool upper_open = true;
  for (;;) {
    lower_open = p(center - width) > alpha;
    upper_open = p(center + width) > alpha;
    if ((!lower_open && !upper_open) || width >= max_width) break;
    width = std::min(2.0 * width, max_width);
  }
  if (lower_open || upper_open) {
    out.notes.push_back("confidence set reaches the search bound; interval truncated at +/-" +
                        std::to_string(options.max_width) + " scale units");
  }
  const double lo = center - width;
  const double hi = center + width;

  auto grid_envelope = [&](const Scan& s) {
    if (s.first < 0) return Interval{center, center};
    return Interval{std::min(center, s.theta[static_cast<std::size_t>(s.first)]),
                    std::max(center, s.theta[static_cast<std::size_t>(s.last)])};
  };

  if (options.search == InversionSearch::grid) {
    const auto s = scan(p, lo, hi, options.grid_points, alpha);
    if (!s.contiguous) out.notes.push_back("non-rejected set is not an interval; reporting its envelope");
    out.interval = grid_envelope(s);
    return out;
  }

  // Odd point count keeps the centre on the pre-scan grid.
  const int n = options.prescan_points | 1;
  const auto s = scan(p, lo, hi, n, alpha);
  if (!s.contiguous) {
    out.notes.push_back("NonUnimodalPValue: p-value is not unimodal on the pre-scan; reporting the grid envelope");
    out.interval = grid_envelope(scan(p, lo, hi, options.grid_points, alpha));
    return out;
  }
  const int mid = n / 2;
  const int first = s.first < 0 ? mid : std::min(s.first, mid);
  const int last = s.last < 0 ? mid : std::max(s.last, mid);
  const auto& t = s.theta;
  out.interval.low = first == 0 ? lo : bisect(p, first == mid ? center : t[first], t[first - 1], alpha, options.tolerance);
  out.interval.high =
      last == n - 1 ? hi : bisect(p, last == mid ? center : t[last], t[last + 1], alpha, options.tolerance);
  return out;
}

InversionResult invert_ci(std::span<const ClusterRecord> data, Method method, double alpha, InversionTest test,
                          const PermutationMode& mode, const InversionOptions& options, bool continuity_correction) {
  const EstimatorOptions eopts{continuity_correction, alpha};
  double center = 0.0;
  double scale = 0.0;
  std::optional<Statistic> statistic;
  auto adjustment = NullSpec::Adjustment::none;
  switch (method) {
    case Method::log_contrast: {
      const auto r = log_contrast_estimate(data, eopts);
      center = r.log_estimate;
      scale = *r.se_log;
      statistic = Statistic::difference_in_means;
      break;
    }
    case Method::covariate_adjusted: {
      const auto r = covariate_adjusted_estimate(data, std::nullopt, eopts).first;
      center = r.log_estimate;
      scale = *r.se_log;
      statistic = Statistic::difference_in_means;
      adjustment = NullSpec::Adjustment::covariates;
      break;
    }
    case Method::odds_ratio:
      center = odds_ratio_estimate(data, eopts).log_estimate;
      scale = odds_ratio_permutation_se(data, mode, continuity_correction);
      statistic = Statistic::odds_ratio;
      break;
    case Method::tpf:
      center = tpf_estimate(data, eopts).log_estimate;
      // No analytic SE exists; the log-contrast SE sets the search scale.
      try {
        scale = *log_contrast_estimate(data, eopts).se_log;
      } catch (const Error&) {
        scale = 0.0;
      }
      statistic = Statistic::tpf;
      break;
    default:
      fail(ErrorCode::InvalidArgument,
           std::string("test inversion is not defined here for method ") + std::string(to_string(method)));
  }

  std::vector<std::string> notes;
  if (!(scale > 0.0)) {
    notes.push_back("zero dispersion; search scale set to 0.1");
    scale = 0.1;
  }

  std::function<double(double)> p;
  if (test == InversionTest::normal) {
    require(method == Method::log_contrast || method == Method::covariate_adjusted, ErrorCode::InvalidArgument,
            "Normal-test inversion needs a method with an analytic standard error");
    p = [center, scale](double theta) { return normal_p_value(center, theta, scale).p; };
  } else {
    p = [&, adjustment](double theta) {
      return permutation_test(data, NullSpec::relative_risk(std::exp(theta), adjustment), *statistic, mode,
                              continuity_correction)
          .p_two_sided;
    };
  }
  auto out = invert_pvalue(p, center, scale, alpha, options);
  out.interval = {std::exp(out.interval.low), std::exp(out.interval.high)};
  out.notes.insert(out.notes.begin(), notes.begin(), notes.end());
  return out;
}

}  // namespace crtnd
