#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "crtnd/error.hpp"
#include "crtnd/simulation.hpp"

using namespace crtnd;

namespace {

SimScenario small_null_scenario() {
  SimScenario s = default_parallel_scenario();
  s.id = "small_null";
  s.lambda = 1.0;
  s.covariate_coupling = false;
  s.ascertainment.fixed = std::vector<double>(24, 1.0);
  s.replicates = 300;
  s.permutation_draws = 50;
  s.seed = 99;
  return s;
}

// NaN compares equal to NaN here: estimators without an SE report NaN ase.
void expect_same(double a, double b, const std::string& what) {
  if (std::isnan(a) && std::isnan(b)) return;
  EXPECT_EQ(a, b) << what;
}

void expect_same_rows(const std::vector<MetricsRow>& a, const std::vector<MetricsRow>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].estimator, b[k].estimator);
    expect_same(a[k].bias, b[k].bias, a[k].estimator);
    expect_same(a[k].se, b[k].se, a[k].estimator);
    expect_same(a[k].ase, b[k].ase, a[k].estimator);
    expect_same(a[k].por, b[k].por, a[k].estimator);
    expect_same(a[k].cp, b[k].cp, a[k].estimator);
    EXPECT_EQ(a[k].por_permutation, b[k].por_permutation);
    EXPECT_EQ(a[k].n_effective, b[k].n_effective);
  }
}

}  // namespace

TEST(Multinomial, TotalsAndMoments) {
  const std::vector<double> w(24, 1.0);
  auto rng = make_stream(3, StreamDomain::analysis, 0);
  const int n = 6000;
  double s = 0, ss = 0;
  for (int k = 0; k < n; ++k) {
    const auto x = draw_multinomial(rng, 2400, w);
    EXPECT_EQ(std::accumulate(x.begin(), x.end(), 0.0), 2400.0);
    s += x[5];
    ss += x[5] * x[5];
  }
  const double mean = s / n;
  const double sd = std::sqrt(ss / n - mean * mean);
  const double expected_sd = std::sqrt(2400.0 * (1.0 / 24) * (23.0 / 24));
  EXPECT_NEAR(expected_sd, 9.79, 0.01);
  EXPECT_NEAR(mean, 100.0, 4 * expected_sd / std::sqrt(n));
  EXPECT_NEAR(sd, expected_sd, 0.35);
}

TEST(SimulateParallel, NullTablesHaveIdenticalArms) {
  const auto s = small_null_scenario();
  const auto rep = simulate_parallel(s, study_ascertainment(s), 0);
  for (int i = 0; i < 24; ++i) {
    EXPECT_EQ(rep.table.oy1(i), rep.table.oy0[i]);
    EXPECT_EQ(rep.table.oz1(i), rep.table.oz0[i]);
  }
  EXPECT_EQ(std::count(rep.assignment.begin(), rep.assignment.end(), 1), 12);
}

TEST(SimulateParallel, CouplingTransformsBothArms) {
  auto s = small_null_scenario();
  auto coupled = s;
  coupled.covariate_coupling = true;
  const auto a = simulate_parallel(s, study_ascertainment(s), 4);
  const auto b = simulate_parallel(coupled, study_ascertainment(coupled), 4);
  for (int i = 0; i < 24; ++i) {
    EXPECT_DOUBLE_EQ(b.table.oy0[i], a.table.oy0[i] * 2 * s.covariate[i]);
    EXPECT_DOUBLE_EQ(b.table.oz0[i], a.table.oz0[i] / (2 * s.covariate[i]));
  }
}

TEST(SimulateParallel, StudyAscertainmentCoupledToRatio) {
  auto s = default_parallel_scenario();
  s.ascertainment.couple_to_ratio = true;
  const auto c = study_ascertainment(s);
  std::vector<std::size_t> order(24);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](auto a, auto b) { return s.baseline_y[a] / s.baseline_z[a] < s.baseline_y[b] / s.baseline_z[b]; });
  for (std::size_t k = 1; k < 24; ++k) EXPECT_LE(c[order[k - 1]], c[order[k]]);
}

TEST(Evaluate, DeterministicAcrossThreadCounts) {
  const auto s = small_null_scenario();
  EvaluateOptions one;
  one.threads = 1;
  EvaluateOptions many;
  many.threads = 4;
  expect_same_rows(evaluate(s, one).rows, evaluate(s, many).rows);
}

TEST(Evaluate, NullScenarioIsUnbiased) {
  const auto r = evaluate(small_null_scenario());
  ASSERT_EQ(r.rows.size(), 4u);
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.n_effective, 300u) << row.estimator;
    EXPECT_LT(std::fabs(row.bias), 4 * row.mc_se_bias + 1e-12) << row.estimator;
  }
}

TEST(Evaluate, DoseResponseRecoversBeta) {
  auto s = default_dose_response_scenario();
  s.replicates = 200;
  const auto r = evaluate(s);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].estimator, "dose_response");
  EXPECT_LT(std::fabs(r.rows[0].bias), 3.5 * r.rows[0].mc_se_bias);
}

TEST(Evaluate, DoseDrawsLieInTheirRanges) {
  const auto s = default_dose_response_scenario();
  const auto& dd = *s.dose;
  const auto d = simulate_dose_response(s, 7);
  ASSERT_EQ(d.size(), 24u);
  for (const auto& r : d) {
    ASSERT_TRUE(r.dose.has_value());
    if (r.arm == 1) {
      EXPECT_GE(*r.dose, dd.treated_low);
      EXPECT_LE(*r.dose, dd.treated_high);
    } else {
      EXPECT_GE(*r.dose, dd.control_low);
      EXPECT_LE(*r.dose, dd.control_high);
    }
  }
}

TEST(SteppedWedgeScenario, ShippedDesign) {
  const auto s = default_sw_scenario();
  EXPECT_EQ(std::accumulate(s.starts_per_period.begin(), s.starts_per_period.end(), 0), 24);
  EXPECT_EQ(std::count(s.starts_per_period.begin(), s.starts_per_period.end(), 3), 8);
  EXPECT_EQ(s.starts_per_period.front(), 0);
}

TEST(SteppedWedgeScenario, IdentityScalingKeepsTestNegativeBaselines) {
  auto s = default_sw_scenario();
  const auto periods = s.baseline_y_periods.cols();
  for (Eigen::Index t = 0; t < periods; ++t) s.baseline_y_periods.col(t) = s.baseline_y_periods.col(periods - 1);
  s.ascertainment.fixed = std::vector<double>(24, 1.0);
  const auto c = study_ascertainment_sw(s);
  const int reps = 300;
  Eigen::MatrixXd mean_z = Eigen::MatrixXd::Zero(24, periods);
  for (int k = 0; k < reps; ++k) mean_z += simulate_stepped_wedge(s, c, k).table.oz0 / reps;
  const double nz = std::accumulate(s.baseline_z.begin(), s.baseline_z.end(), 0.0);
  for (int i = 0; i < 24; ++i) {
    const double expected = s.baseline_z[i];
    const double sd = std::sqrt(nz * (expected / nz) * (1 - expected / nz) / reps);
    for (Eigen::Index t = 0; t < periods; ++t) EXPECT_NEAR(mean_z(i, t), expected, 5 * sd + 1.0);
  }
}

TEST(SteppedWedgeScenario, NullBiasAndDeterminism) {
  auto s = default_sw_scenario();
  s.replicates = 150;
  s.ascertainment.fixed = std::vector<double>(24, 1.0);
  EvaluateOptions one;
  one.threads = 1;
  const auto a = evaluate(s, one);
  const auto b = evaluate(s);
  expect_same_rows(a.rows, b.rows);
  for (const auto& row : a.rows) EXPECT_LT(std::fabs(row.bias), 4 * row.mc_se_bias) << row.estimator;
}

TEST(Sweep, FixedAscertainmentGivesSmallBiasEverywhere) {
  auto s = small_null_scenario();
  s.replicates = 60;
  s.estimators = {"log_contrast", "odds_ratio"};
  const auto r = replicate_ascertainment_sweep(s, 3);
  ASSERT_EQ(r.estimators.size(), 2u);
  for (const auto& e : r.estimators) {
    ASSERT_EQ(e.abs_bias.size(), 3u);
    // Fixed c: every configuration is the same study.
    EXPECT_EQ(e.abs_bias[0], e.abs_bias[1]);
    EXPECT_LT(e.abs_bias[0], 0.05);
  }
}

TEST(Scenario, ValidationRejectsBadConfigs) {
  auto s = default_parallel_scenario();
  s.lambda = -1;
  EXPECT_THROW(s.validate(), Error);
  s = default_parallel_scenario();
  s.estimators = {"sw_equal"};
  EXPECT_THROW(s.validate(), Error);
  s = default_sw_scenario();
  s.starts_per_period = {0, 3, 3};
  EXPECT_THROW(s.validate(), Error);
}

TEST(Scenario, DegenerateReplicateLimit) {
  auto s = small_null_scenario();
  // Cells with negligible weight stay at zero after every redraw.
  s.baseline_y.assign(24, 1e-9);
  s.baseline_y[0] = 1e6;
  s.replicates = 50;
  s.estimators = {"log_contrast"};
  try {
    evaluate(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateReplicateLimit);
  }
}
