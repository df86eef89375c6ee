#pragma once

#include <cstddef>
#include <span>

namespace crtnd::stats {

double normal_cdf(double x);
double normal_quantile(double p);

// Two-sided p-value for a standard Normal statistic.
double normal_two_sided_p(double z);

double mean(std::span<const double> x);
// Denominator n - 1. Requires n >= 2.
double sample_variance(std::span<const double> x);
double sample_covariance(std::span<const double> x, std::span<const double> y);

// Neumaier-compensated accumulator; summation order is the caller's.
class CompensatedSum {
 public:
  void add(double v) noexcept;
  double value() const noexcept { return sum_ + compensation_; }
  std::size_t count() const noexcept { return count_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
  std::size_t count_ = 0;
};

}  // namespace crtnd::stats
