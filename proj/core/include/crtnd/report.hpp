#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crtnd {

enum class Method { odds_ratio, tpf, log_contrast, covariate_adjusted, dose_response, sw_log_contrast };
enum class CiMethod { normal, test_inversion, permutation };

std::string_view to_string(Method m) noexcept;
std::string_view to_string(CiMethod m) noexcept;

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

struct Diagnostics {
  std::map<std::string, double> values;
  std::map<std::string, std::vector<double>> vectors;
  std::vector<std::string> notes;
};

// Point estimate on the log scale (log lambda, or beta for dose-response),
// with an optional standard error and a confidence interval on the natural
// scale (lambda, or beta).
struct EstimateReport {
  Method method = Method::log_contrast;
  double log_estimate = 0.0;
  std::optional<double> se_log;
  std::optional<Interval> ci;
  CiMethod ci_method = CiMethod::normal;
  double alpha = 0.05;
  std::optional<double> p_value;  // test of the default null (lambda = 1 / beta = 0)
  Diagnostics diagnostics;

  // exp(log_estimate) for relative-risk methods, the slope itself for dose-response.
  double natural_estimate() const;
  bool lambda_scale() const noexcept { return method != Method::dose_response; }
};

// Normal interval log_estimate +/- z_{1-alpha/2} * se, exponentiated for
// relative-risk methods.
Interval normal_interval(double log_estimate, double se, double alpha, bool lambda_scale);

}  // namespace crtnd
