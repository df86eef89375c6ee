#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <vector>

#include "crtnd/model.hpp"

namespace crtnd::oracle {

// Six clusters, three treated: small enough to enumerate all 20 assignments
// with a bitmask loop that does not touch the library's enumerator.
inline PotentialTable six_cluster_table(double lambda, bool coupled = false) {
  PotentialTable t;
  t.cluster_ids = {"c1", "c2", "c3", "c4", "c5", "c6"};
  t.oy0 = {40, 55, 30, 70, 25, 60};
  t.oz0 = {120, 90, 150, 100, 80, 140};
  t.c = {0.6, 1.4, 0.9, 2.0, 0.5, 1.2};
  t.lambda = lambda;
  if (coupled) {
    // Largest c where O~Y / O~Z is largest.
    std::vector<std::size_t> order(6);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return t.oy0[a] / t.oz0[a] < t.oy0[b] / t.oz0[b]; });
    std::vector<double> sorted_c = t.c;
    std::sort(sorted_c.begin(), sorted_c.end());
    for (std::size_t k = 0; k < 6; ++k) t.c[order[k]] = sorted_c[k];
  }
  t.covariates.resize(6, 1);
  t.covariates << 1.1, 0.8, 1.5, 0.7, 1.3, 0.9;
  return t;
}

// All arm vectors of length m with exactly k ones, by bitmask.
inline std::vector<std::vector<int>> all_assignments(int m, int k) {
  std::vector<std::vector<int>> out;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    if (std::popcount(mask) != k) continue;
    std::vector<int> a(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) a[static_cast<std::size_t>(i)] = (mask >> i) & 1u;
    out.push_back(a);
  }
  return out;
}

// Hand-rolled difference in means, independent of the library kernels.
inline double diff_means(const std::vector<double>& v, const std::vector<int>& a) {
  double s1 = 0, s0 = 0;
  int n1 = 0, n0 = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (a[i]) {
      s1 += v[i];
      ++n1;
    } else {
      s0 += v[i];
      ++n0;
    }
  }
  return s1 / n1 - s0 / n0;
}

inline double population_variance(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

inline double average(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Log-contrasts of the realized data, computed directly from the table.
inline std::vector<double> realized_l(const PotentialTable& t, const std::vector<int>& a) {
  std::vector<double> l(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double y = a[i] ? t.lambda * t.c[i] * t.oy0[i] : t.oy0[i];
    const double z = a[i] ? t.c[i] * t.oz0[i] : t.oz0[i];
    l[i] = std::log(y) - std::log(z);
  }
  return l;
}

}  // namespace crtnd::oracle
