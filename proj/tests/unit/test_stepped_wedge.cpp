#include <cmath>

#include <gtest/gtest.h>

#include "crtnd/error.hpp"
#include "crtnd/stepped_wedge.hpp"

using namespace crtnd;

namespace {

SWPotentialTable toy_table(double lambda) {
  SWPotentialTable t;
  t.cluster_ids = {"a", "b", "c", "d"};
  t.oy0.resize(4, 3);
  t.oz0.resize(4, 3);
  t.c.resize(4, 3);
  t.oy0 << 40, 55, 30, 70, 25, 60, 35, 45, 80, 52, 61, 33;
  t.oz0 << 120, 90, 150, 100, 80, 140, 95, 110, 130, 105, 88, 125;
  t.c << 0.6, 1.4, 0.9, 2.0, 0.5, 1.2, 1.1, 0.7, 1.6, 0.8, 1.3, 0.95;
  t.lambda = lambda;
  return t;
}

// Per-period contrasts by hand: mean over A_i <= t minus mean over A_i > t.
std::vector<double> hand_contrasts(const SWPotentialTable& t, const Assignment& starts, const std::vector<int>& periods) {
  std::vector<double> out;
  for (int p : periods) {
    double s1 = 0, s0 = 0;
    int n1 = 0, n0 = 0;
    for (int i = 0; i < t.clusters(); ++i) {
      const bool treated = starts[i] <= p;
      const double y = treated ? t.lambda * t.c(i, p - 1) * t.oy0(i, p - 1) : t.oy0(i, p - 1);
      const double z = treated ? t.c(i, p - 1) * t.oz0(i, p - 1) : t.oz0(i, p - 1);
      (treated ? s1 : s0) += std::log(y / z);
      ++(treated ? n1 : n0);
    }
    out.push_back(s1 / n1 - s0 / n0);
  }
  return out;
}

struct Moments {
  double mean = 0;
  double var = 0;
};

Moments enumerate(const SWPotentialTable& t, const AssignmentScheme& scheme, const Eigen::VectorXd& w) {
  const auto periods = scheme.analysis_periods();
  std::vector<double> est;
  for (const auto& a : enumerate_assignments(scheme)) {
    const auto c = hand_contrasts(t, a, periods);
    double e = 0;
    for (std::size_t k = 0; k < c.size(); ++k) e += w(static_cast<Eigen::Index>(k)) * c[k];
    est.push_back(e);
    const auto panel = realize(t, a);
    EXPECT_NEAR(sw_point_estimate(panel.log_contrasts(), a, periods, w), e, 1e-13);
  }
  Moments m;
  for (double e : est) m.mean += e / static_cast<double>(est.size());
  for (double e : est) m.var += (e - m.mean) * (e - m.mean) / static_cast<double>(est.size());
  return m;
}

}  // namespace

TEST(SteppedWedge, SchemeFromStarts) {
  const std::vector<int> starts = {2, 1, 3, 2};
  const auto s = sw_scheme(starts, 3);
  EXPECT_EQ(s.starts_per_period(), (std::vector<int>{1, 2, 1}));
}

TEST(SteppedWedge, OracleCovarianceMatchesEnumeration) {
  for (double lambda : {1.0, 0.6, 0.2}) {
    const auto t = toy_table(lambda);
    const auto scheme = AssignmentScheme::stepped_wedge({1, 2, 1});
    const auto sigma = sw_covariance_oracle(t.control_log_contrasts(), scheme);
    ASSERT_EQ(sigma.sigma.rows(), 2);
    const auto eq = equal_weights(2);
    const auto opt = optimal_weights(sigma);
    const auto me = enumerate(t, scheme, eq.w);
    const auto mo = enumerate(t, scheme, opt.w);
    EXPECT_NEAR(me.mean, std::log(lambda), 1e-12);
    EXPECT_NEAR(mo.mean, std::log(lambda), 1e-12);
    EXPECT_NEAR(eq.w.dot(sigma.sigma * eq.w), me.var, 1e-10);
    EXPECT_NEAR(opt.w.dot(sigma.sigma * opt.w), mo.var, 1e-10);
    EXPECT_LE(mo.var, me.var + 1e-15);
    EXPECT_NEAR(opt.w.sum(), 1.0, 1e-12);
  }
}

TEST(SteppedWedge, FullCovarianceMatrixByEnumeration) {
  const auto t = toy_table(0.6);
  const auto scheme = AssignmentScheme::stepped_wedge({1, 2, 1});
  const auto periods = scheme.analysis_periods();
  const auto sigma = sw_covariance_oracle(t.control_log_contrasts(), scheme);
  std::vector<std::vector<double>> draws;
  for (const auto& a : enumerate_assignments(scheme)) draws.push_back(hand_contrasts(t, a, periods));
  const double n = static_cast<double>(draws.size());
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      double mi = 0, mj = 0, cij = 0;
      for (const auto& d : draws) mi += d[i] / n, mj += d[j] / n;
      for (const auto& d : draws) cij += (d[i] - mi) * (d[j] - mj) / n;
      EXPECT_NEAR(sigma.sigma(i, j), cij, 1e-12);
    }
  }
}

TEST(SteppedWedge, LeadingUntreatedPeriodIsDropped) {
  auto t = toy_table(0.6);
  const auto scheme = AssignmentScheme::stepped_wedge({0, 2, 2});
  EXPECT_EQ(scheme.analysis_periods(), (std::vector<int>{2}));
  const auto panel = realize(t, std::vector<int>{2, 3, 2, 3});
  const auto r = sw_log_contrast(panel, equal_weights(1));
  ASSERT_FALSE(r.diagnostics.notes.empty());
  EXPECT_NE(r.diagnostics.notes.front().find("dropped"), std::string::npos);
  const auto m = enumerate(t, scheme, equal_weights(1).w);
  EXPECT_NEAR(m.mean, std::log(0.6), 1e-12);
}

TEST(SteppedWedge, WeightsMustSumToOne) {
  const auto panel = realize(toy_table(1.0), std::vector<int>{1, 2, 2, 3});
  SWWeights w{Eigen::Vector2d(0.7, 0.7), SWWeights::Kind::file, {}};
  try {
    sw_log_contrast(panel, w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(SteppedWedge, SingularCovarianceIsRejected) {
  SWCovariance s;
  s.sigma = Eigen::Matrix2d::Ones();
  try {
    optimal_weights(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularCovariance);
  }
}

TEST(SteppedWedge, EstimatedCovarianceConventions) {
  // Twelve clusters, four periods, three starting at each of periods 1..4.
  const int m = 12, T = 4;
  Eigen::MatrixXd l(m, T);
  for (int i = 0; i < m; ++i) {
    for (int t = 0; t < T; ++t) l(i, t) = std::sin(1.3 * i + 0.7 * t) + 0.1 * i * t;
  }
  const std::vector<int> starts = {1, 1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4};
  const auto canon = sw_covariance_estimate(l, starts, SigmaConvention::canonical);
  ASSERT_EQ(canon.periods, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(canon.group_sizes, (std::vector<int>{3, 6, 9}));

  auto var_of = [&](const std::vector<int>& rows, int t) {
    double mu = 0, s = 0;
    for (int r : rows) mu += l(r, t - 1) / rows.size();
    for (int r : rows) s += (l(r, t - 1) - mu) * (l(r, t - 1) - mu);
    return s / (rows.size() - 1);
  };
  // Period 2: treated {0..5}, control {6..11}.
  const double diag = var_of({0, 1, 2, 3, 4, 5}, 2) / 6 + var_of({6, 7, 8, 9, 10, 11}, 2) / 6;
  EXPECT_NEAR(canon.sigma(1, 1), diag, 1e-12);
  // Off-diagonal (1, 3): groups {A<=1}=3, {1<A<=3}=6, {A>3}=3; the switchers are largest.
  EXPECT_NEAR(canon.sigma(0, 2), 12.0 / (9 * (12 - 3)) * canon.s_values(0, 2), 1e-12);
}

// The m_{t2-1} scaling divides by zero at the first analysis period of any
// design, since no cluster is treated before it.
TEST(SteppedWedge, PrintedScalingIsUndefinedAtTheFirstPeriod) {
  Eigen::MatrixXd l(6, 3);
  for (int i = 0; i < 6; ++i) {
    for (int t = 0; t < 3; ++t) l(i, t) = 0.3 * i - 0.2 * t + 0.05 * i * i;
  }
  for (const std::vector<int>& starts : {std::vector<int>{1, 1, 1, 2, 3, 3}, std::vector<int>{2, 2, 2, 3, 3, 3}}) {
    try {
      sw_covariance_estimate(l, starts, SigmaConvention::printed);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::SingularCovariance);
    }
  }
}

TEST(SteppedWedge, PermutationTestUnderTheTrueNullIsSuperUniform) {
  const auto t = toy_table(0.6);
  const auto scheme = AssignmentScheme::stepped_wedge({1, 2, 1});
  std::vector<double> ps;
  for (const auto& a : enumerate_assignments(scheme)) {
    ps.push_back(sw_permutation_test(realize(t, a), equal_weights(2), 0.6, PermutationMode::exact()).p_two_sided);
  }
  for (double alpha : ps) {
    const auto k = std::count_if(ps.begin(), ps.end(), [&](double p) { return p <= alpha; });
    EXPECT_LE(k / 12.0, alpha + 1e-12);
  }
}
