#include <cmath>

#include <gtest/gtest.h>

#include "crtnd/diagnostics.hpp"
#include "crtnd/error.hpp"
#include "crtnd/estimators.hpp"
#include "oracle_tables.hpp"

using namespace crtnd;
using crtnd::oracle::all_assignments;
using crtnd::oracle::average;
using crtnd::oracle::diff_means;
using crtnd::oracle::population_variance;
using crtnd::oracle::realized_l;
using crtnd::oracle::six_cluster_table;

namespace {

ClusterData from_log_contrasts(const std::vector<double>& treated, const std::vector<double>& control) {
  ClusterData d;
  int k = 0;
  for (double l : treated) d.push_back({"t" + std::to_string(k++), 1, std::exp(l), 1.0, {}, {}});
  for (double l : control) d.push_back({"c" + std::to_string(k++), 0, std::exp(l), 1.0, {}, {}});
  return d;
}

// Table whose control log-contrasts are 2 X + noise.
PotentialTable linear_covariate_table(double lambda) {
  PotentialTable t;
  const std::vector<double> x = {0.3, 1.2, 0.7, 1.9, 1.4, 0.2};
  const std::vector<double> noise = {0.05, -0.12, 0.08, 0.02, -0.04, 0.11};
  t.covariates.resize(6, 1);
  for (int i = 0; i < 6; ++i) {
    t.cluster_ids.push_back("k" + std::to_string(i));
    t.oz0.push_back(100.0);
    t.oy0.push_back(100.0 * std::exp(2.0 * x[i] + noise[i]));
    t.c.push_back(0.5 + 0.3 * i);
    t.covariates(i, 0) = x[i];
  }
  t.lambda = lambda;
  return t;
}

}  // namespace

TEST(OddsRatio, SymmetricArmsGiveOne) {
  const ClusterData d = {{"a", 1, 10, 20, {}, {}}, {"b", 0, 10, 20, {}, {}}};
  EXPECT_DOUBLE_EQ(odds_ratio_estimate(d).natural_estimate(), 1.0);
}

TEST(OddsRatio, DirectSubstitution) {
  const ClusterData d = {{"a", 1, 5, 20, {}, {}}, {"b", 0, 10, 20, {}, {}}};
  EXPECT_NEAR(odds_ratio_estimate(d).natural_estimate(), 0.5, 1e-15);
}

TEST(OddsRatio, ZeroArmTotal) {
  const ClusterData d = {{"a", 1, 0, 20, {}, {}}, {"b", 0, 10, 20, {}, {}}};
  try {
    odds_ratio_estimate(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroArmTotal);
  }
}

TEST(OddsRatio, BiasedUnderCoupledAscertainment) {
  for (double lambda : {1.0, 0.6, 0.2}) {
    const auto t = six_cluster_table(lambda, true);
    std::vector<double> est;
    for (const auto& a : all_assignments(6, 3)) {
      double y1 = 0, y0 = 0, z1 = 0, z0 = 0;
      for (int i = 0; i < 6; ++i) {
        if (a[i]) {
          y1 += lambda * t.c[i] * t.oy0[i];
          z1 += t.c[i] * t.oz0[i];
        } else {
          y0 += t.oy0[i];
          z0 += t.oz0[i];
        }
      }
      est.push_back(std::log(y1 / y0) + std::log(z0 / z1));
    }
    const double oracle_bias = average(est) - std::log(lambda);
    const auto b = odds_ratio_bias(t, 3);
    EXPECT_EQ(b.assignments, 20u);
    EXPECT_NEAR(b.enumerated, oracle_bias, 1e-12);
    EXPECT_NEAR(b.expression, b.enumerated, 1e-10);
    EXPECT_GT(std::fabs(b.enumerated), 1e-3);
  }
}

TEST(Tpf, StatisticArithmetic) {
  const ClusterData d = {{"a", 1, 10, 10, {}, {}}, {"b", 1, 3, 7, {}, {}}, {"c", 0, 2, 8, {}, {}}, {"d", 0, 4, 6, {}, {}}};
  const auto s = tpf_statistic(d);
  EXPECT_NEAR(s.t, 0.1, 1e-15);
  EXPECT_NEAR(s.r, 31.0 / 19.0, 1e-15);
}

TEST(Tpf, IdenticalFractionsGiveZero) {
  const ClusterData d = {{"a", 1, 10, 30, {}, {}}, {"b", 0, 20, 60, {}, {}}};
  EXPECT_DOUBLE_EQ(tpf_statistic(d).t, 0.0);
}

TEST(Tpf, PooledRatio) {
  const ClusterData d = {{"a", 1, 40, 100, {}, {}}, {"b", 0, 60, 200, {}, {}}};
  EXPECT_DOUBLE_EQ(tpf_statistic(d).r, 3.0);
}

TEST(Tpf, EmptyClusterAndZeroPositives) {
  const ClusterData empty = {{"a", 1, 0, 0, {}, {}}, {"b", 0, 1, 1, {}, {}}};
  const ClusterData none = {{"a", 1, 0, 3, {}, {}}, {"b", 0, 0, 1, {}, {}}};
  try {
    tpf_statistic(empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCluster);
  }
  try {
    tpf_statistic(none);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroPositiveTotal);
  }
}

TEST(TpfSolve, ZeroStatisticGivesOneExactly) {
  for (double r : {0.1, 1.0, 3.0, 50.0}) EXPECT_EQ(tpf_solve(0.0, r), 1.0);
}

TEST(TpfSolve, WorkedValue) {
  const double t = 2.0 * (0.25 - 1.0) / ((1.5 + 1.0) * (0.5 + 3.0));
  EXPECT_NEAR(t, -0.17142857, 1e-8);
  EXPECT_NEAR(tpf_solve(t, 1.0), 0.5, 1e-12);
  EXPECT_NEAR(tpf_solve(tpf_expected(0.2, 3.0), 3.0), 0.2, 1e-10);
}

TEST(TpfSolve, ForwardMapIsIncreasing) {
  for (double r : {0.1, 2.0, 50.0}) {
    double prev = -1.0;
    for (double lambda = 0.01; lambda < 100.0; lambda *= 1.1) {
      const double e = tpf_expected(lambda, r);
      EXPECT_GT(e, prev);
      EXPECT_LT(std::fabs(e), 2.0 / (2.0 + r));
      prev = e;
    }
  }
}

TEST(TpfSolve, OutsideRangeHasNoRoot) {
  try {
    tpf_solve(2.0 / 5.0 + 1e-9, 3.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoAdmissibleRoot);
  }
}

TEST(TpfBias, FirstTermIsTheExactMeanOfT) {
  for (double lambda : {1.0, 0.6, 0.2}) {
    const auto d = tpf_bias_decomposition(six_cluster_table(lambda), 3);
    EXPECT_NEAR(d.mean_t, d.first_term, 1e-12);
    EXPECT_NEAR(d.bias, d.first_term - d.mean_expected, 1e-15);
  }
  EXPECT_NEAR(tpf_bias_decomposition(six_cluster_table(1.0), 3).first_term, 0.0, 1e-15);
}

TEST(LogContrast, Arithmetic) {
  const auto r = log_contrast_estimate(from_log_contrasts({0.1, 0.3}, {0.0, 0.2}));
  EXPECT_NEAR(r.log_estimate, 0.1, 1e-15);
  EXPECT_NEAR(*r.se_log * *r.se_log, 0.02, 1e-15);
}

TEST(LogContrast, DegenerateNoVariance) {
  const auto r = log_contrast_estimate(from_log_contrasts({0.2, 0.2}, {0.2, 0.2}));
  EXPECT_EQ(r.log_estimate, 0.0);
  EXPECT_EQ(*r.se_log, 0.0);
}

TEST(LogContrast, NormalIntervalMatchesFormula) {
  const auto r = log_contrast_estimate(from_log_contrasts({0.1, 0.3, 0.25}, {0.0, 0.2, -0.1}));
  const double z = 1.959963984540054;
  EXPECT_NEAR(r.ci->low, std::exp(r.log_estimate - z * *r.se_log), 1e-12);
  EXPECT_NEAR(r.ci->high, std::exp(r.log_estimate + z * *r.se_log), 1e-12);
}

TEST(LogContrast, ArmTooSmall) {
  try {
    log_contrast_estimate(from_log_contrasts({0.1}, {0.0, 0.2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ArmTooSmall);
  }
}

TEST(LogContrast, EnumerationUnbiasedForEstimateAndVariance) {
  for (double lambda : {1.0, 0.6, 0.2}) {
    const auto t = six_cluster_table(lambda);
    std::vector<double> est, var;
    for (const auto& a : all_assignments(6, 3)) {
      const auto r = log_contrast_estimate(realize(t, a));
      est.push_back(r.log_estimate);
      var.push_back(*r.se_log * *r.se_log);
      EXPECT_NEAR(r.log_estimate, diff_means(realized_l(t, a), a), 1e-13);
    }
    EXPECT_NEAR(average(est), std::log(lambda), 1e-12);
    EXPECT_NEAR(average(var), population_variance(est), 1e-10);
  }
}

TEST(CovariateAdjusted, ZeroBetaIsUnadjusted) {
  const auto t = six_cluster_table(0.6);
  const auto d = realize(t, std::vector<int>{1, 1, 0, 1, 0, 0});
  const auto adj = covariate_adjusted_estimate(d, Eigen::VectorXd::Zero(1)).first;
  const auto un = log_contrast_estimate(d);
  EXPECT_NEAR(adj.log_estimate, un.log_estimate, 1e-15);
  EXPECT_NEAR(*adj.se_log, *un.se_log, 1e-15);
}

TEST(CovariateAdjusted, ConstantCovariateHasNoEffect) {
  auto t = six_cluster_table(0.6);
  t.covariates.setConstant(2.5);
  const auto d = realize(t, std::vector<int>{1, 1, 0, 1, 0, 0});
  const auto adj = covariate_adjusted_estimate(d, Eigen::VectorXd::Constant(1, 0.7)).first;
  EXPECT_NEAR(adj.log_estimate, log_contrast_estimate(d).log_estimate, 1e-14);
}

TEST(CovariateAdjusted, FitInvariants) {
  const ClusterData d = realize(linear_covariate_table(0.6), std::vector<int>{0, 1, 1, 0, 1, 0});
  const auto [r, fit] = covariate_adjusted_estimate(d);
  EXPECT_FALSE(fit.beta_supplied);
  EXPECT_NEAR(fit.beta_hat(0), 0.5 * fit.beta_treated(0) + 0.5 * fit.beta_control(0), 1e-15);
  EXPECT_GE(fit.resid_var_treated, 0.0);
  EXPECT_GE(fit.resid_var_control, 0.0);
}

TEST(CovariateAdjusted, TranslationInvariant) {
  auto t = linear_covariate_table(0.6);
  const std::vector<int> a = {0, 1, 1, 0, 1, 0};
  const auto base = covariate_adjusted_estimate(realize(t, a)).first;
  t.covariates.array() += 13.0;
  const auto shifted = covariate_adjusted_estimate(realize(t, a)).first;
  EXPECT_NEAR(base.log_estimate, shifted.log_estimate, 1e-12);
}

TEST(CovariateAdjusted, RankDeficient) {
  auto t = six_cluster_table(1.0);
  t.covariates.resize(6, 2);
  t.covariates << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10, 6, 12;
  ClusterData d = realize(t, std::vector<int>{1, 0, 1, 0, 1, 0});
  for (auto& r : d) r.covariates.push_back(1.0);
  try {
    covariate_adjusted_estimate(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::RankDeficientCovariates || e.code() == ErrorCode::ArmTooSmall);
  }
}

TEST(CovariateAdjusted, OptimalBetaEnumeration) {
  const double lambda = 0.6;
  const auto t = linear_covariate_table(lambda);
  const auto l0 = t.control_log_contrasts();
  const Eigen::VectorXd beta = optimal_covariate_coefficients(t.covariates, l0);

  // beta* by hand: covariance of (X, L0) over variance of X, both with n - 1.
  double mx = 0, ml = 0;
  for (int i = 0; i < 6; ++i) {
    mx += t.covariates(i, 0) / 6;
    ml += l0[i] / 6;
  }
  double sxx = 0, sxl = 0;
  for (int i = 0; i < 6; ++i) {
    sxx += (t.covariates(i, 0) - mx) * (t.covariates(i, 0) - mx);
    sxl += (t.covariates(i, 0) - mx) * (l0[i] - ml);
  }
  EXPECT_NEAR(beta(0), sxl / sxx, 1e-12);

  std::vector<double> adj, un;
  for (const auto& a : all_assignments(6, 3)) {
    const auto d = realize(t, a);
    adj.push_back(covariate_adjusted_estimate(d, beta).first.log_estimate);
    un.push_back(log_contrast_estimate(d).log_estimate);
  }
  EXPECT_NEAR(average(adj), std::log(lambda), 1e-12);
  EXPECT_LT(population_variance(adj), population_variance(un));
  const double vx = sxx / 5;
  EXPECT_NEAR(population_variance(un), population_variance(adj) + 6.0 / (3 * 3) * beta(0) * vx * beta(0), 1e-10);
}
