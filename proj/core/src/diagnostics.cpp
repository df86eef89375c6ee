#include "crtnd/diagnostics.hpp"

#include <cmath>

#include "crtnd/error.hpp"
#include "crtnd/estimators.hpp"
#include "crtnd/stats.hpp"

namespace crtnd {

OddsRatioBias odds_ratio_bias(const PotentialTable& table, int treated, std::uint64_t cap) {
  table.validate();
  const int m = table.clusters();
  AssignmentEnumerator e(AssignmentScheme::parallel(m, treated), cap);
  stats::CompensatedSum expression;
  stats::CompensatedSum enumerated;
  const double log_lambda = std::log(table.lambda);
  Assignment a;
  std::vector<double> y(static_cast<std::size_t>(m));
  std::vector<double> z(static_cast<std::size_t>(m));
  while (e.next(a)) {
    double cy1 = 0.0, y0 = 0.0, z0 = 0.0, cz1 = 0.0;
    for (int i = 0; i < m; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (a[k] == 1) {
        cy1 += table.c[k] * table.oy0[k];
        cz1 += table.c[k] * table.oz0[k];
        y[k] = table.oy1(i);
        z[k] = table.oz1(i);
      } else {
        y0 += table.oy0[k];
        z0 += table.oz0[k];
        y[k] = table.oy0[k];
        z[k] = table.oz0[k];
      }
    }
    expression.add(std::log(cy1 / y0 * (z0 / cz1)));
    enumerated.add(log_odds_ratio(y, z, a) - log_lambda);
  }
  const auto n = static_cast<double>(e.total());
  return {expression.value() / n, enumerated.value() / n, e.total()};
}

TpfBiasDecomposition tpf_bias_decomposition(const PotentialTable& table, int treated, std::uint64_t cap) {
  table.validate();
  const int m = table.clusters();
  const double lambda = table.lambda;
  TpfBiasDecomposition out;
  stats::CompensatedSum first;
  for (int i = 0; i < m; ++i) {
    const auto k = static_cast<std::size_t>(i);
    require(table.oy0[k] > 0.0, ErrorCode::ZeroCount, "U_i needs positive control test-positive counts");
    const double u = table.oz0[k] / table.oy0[k];
    first.add((lambda - 1.0) * u / ((lambda + u) * (1.0 + u)));
  }
  out.first_term = first.value() / m;

  AssignmentEnumerator e(AssignmentScheme::parallel(m, treated), cap);
  stats::CompensatedSum expected;
  stats::CompensatedSum t_sum;
  Assignment a;
  std::vector<double> y(static_cast<std::size_t>(m));
  std::vector<double> z(static_cast<std::size_t>(m));
  while (e.next(a)) {
    for (int i = 0; i < m; ++i) {
      const auto k = static_cast<std::size_t>(i);
      y[k] = a[k] == 1 ? table.oy1(i) : table.oy0[k];
      z[k] = a[k] == 1 ? table.oz1(i) : table.oz0[k];
    }
    const auto stat = tpf_statistic(y, z, a);
    expected.add(tpf_expected(lambda, stat.r));
    t_sum.add(stat.t);
  }
  const auto n = static_cast<double>(e.total());
  out.assignments = e.total();
  out.mean_expected = expected.value() / n;
  out.mean_t = t_sum.value() / n;
  out.bias = out.first_term - out.mean_expected;
  return out;
}

}  // namespace crtnd
