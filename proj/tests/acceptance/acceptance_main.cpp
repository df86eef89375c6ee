// One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "crtnd/diagnostics.hpp"
#include "crtnd/error.hpp"
#include "crtnd/estimators.hpp"
#include "crtnd/inference.hpp"
#include "crtnd/simulation.hpp"
#include "crtnd/stepped_wedge.hpp"
#include "oracle_tables.hpp"

using namespace crtnd;
using namespace crtnd::oracle;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += "[failed: " + what + "] ";
    }
  }
  void note(const std::string& s) { detail += s + " "; }
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

const MetricsRow& row_of(const EvaluationResult& r, const std::string& estimator) {
  for (const auto& row : r.rows) {
    if (row.estimator == estimator) return row;
  }
  throw Error(ErrorCode::InvalidArgument, "no metrics row for " + estimator);
}

// Criterion 1: log-contrast and its variance estimator are unbiased over the
// 20 assignments of the six-cluster table.
Outcome exact_unbiasedness() {
  Outcome o;
  double worst_mean = 0, worst_var = 0;
  for (double lambda : {1.0, 0.6, 0.2}) {
    const auto t = six_cluster_table(lambda);
    std::vector<double> est, var;
    for (const auto& a : all_assignments(6, 3)) {
      const auto r = log_contrast_estimate(realize(t, a));
      o.check(std::fabs(r.log_estimate - diff_means(realized_l(t, a), a)) < 1e-13, "estimate matches hand value");
      est.push_back(r.log_estimate);
      var.push_back(*r.se_log * *r.se_log);
    }
    worst_mean = std::max(worst_mean, std::fabs(average(est) - std::log(lambda)));
    worst_var = std::max(worst_var, std::fabs(average(var) - population_variance(est)));
  }
  o.check(worst_mean <= 1e-12, "mean within 1e-12");
  o.check(worst_var <= 1e-10, "variance within 1e-10");
  o.note("max|mean-log(lambda)|=" + fmt(worst_mean) + " max|E[var]-Var|=" + fmt(worst_var));
  return o;
}

// Criterion 2: coupled ascertainment biases the odds ratio; the closed-form
// bias expression agrees with a hand enumeration.
Outcome odds_ratio_bias_reproduction() {
  Outcome o;
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
      est.push_back(std::log(y1 / y0 * z0 / z1));
    }
    const double hand = average(est) - std::log(lambda);
    const auto b = odds_ratio_bias(t, 3);
    o.check(std::fabs(b.expression - hand) <= 1e-10, "expression equals enumeration");
    o.check(std::fabs(hand) > 1e-3, "bias nonzero");
    o.note("lambda=" + fmt(lambda) + ":bias=" + fmt(hand));
  }
  return o;
}

// Criterion 3: tpf_solve inverts the forward map on a 50 x 50 grid.
Outcome tpf_round_trip() {
  Outcome o;
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    const double lambda = 0.05 * std::pow(20.0 / 0.05, i / 49.0);
    for (int j = 0; j < 50; ++j) {
      const double r = 0.1 * std::pow(50.0 / 0.1, j / 49.0);
      worst = std::max(worst, std::fabs(tpf_solve(tpf_expected(lambda, r), r) - lambda));
    }
  }
  o.check(worst <= 1e-8, "round trip within 1e-8");
  bool exact_one = true;
  for (int j = 0; j < 50; ++j) exact_one = exact_one && tpf_solve(0.0, 0.1 * std::pow(500.0, j / 49.0)) == 1.0;
  o.check(exact_one, "T=0 gives 1 exactly");
  o.note("max error=" + fmt(worst));
  return o;
}

// Criteria 4 and 5 share one run of the shipped parallel scenario.
EvaluationResult parallel_null_run() {
  auto s = default_parallel_scenario();
  s.lambda = 1.0;
  s.replicates = 10'000;
  s.estimators = {"log_contrast", "covariate_adjusted"};
  return evaluate(s);
}

Outcome null_calibration(const EvaluationResult& r) {
  Outcome o;
  const auto& lc = row_of(r, "log_contrast");
  const double por = lc.por_permutation.value_or(-1.0);
  o.check(lc.cp >= 0.94 && lc.cp <= 0.96, "CP in [0.94, 0.96]");
  o.check(por >= 0.04 && por <= 0.06, "exact-permutation PoR in [0.04, 0.06]");
  o.note("replicates=" + std::to_string(lc.n_effective) + " CP=" + fmt(lc.cp) + " PoR(perm)=" + fmt(por) +
         " PoR(normal)=" + fmt(lc.por) +
         " SE=" + fmt(lc.se, 3) + " ASE=" + fmt(lc.ase, 3));
  return o;
}

Outcome covariate_gain(const EvaluationResult& r) {
  Outcome o;
  const auto& lc = row_of(r, "log_contrast");
  const auto& ca = row_of(r, "covariate_adjusted");
  const double reduction = 1.0 - (ca.se * ca.se) / (lc.se * lc.se);
  o.check(ca.se < lc.se, "SE(adjusted) < SE(unadjusted)");
  o.check(reduction >= 0.10, "variance reduction >= 10%");

  // Variance decomposition over the 20 assignments of the six-cluster table.
  const auto t = six_cluster_table(0.6);
  const auto l0 = t.control_log_contrasts();
  const Eigen::VectorXd beta = optimal_covariate_coefficients(t.covariates, l0);
  std::vector<double> adj, un;
  for (const auto& a : all_assignments(6, 3)) {
    const auto d = realize(t, a);
    adj.push_back(covariate_adjusted_estimate(d, beta).first.log_estimate);
    un.push_back(diff_means(realized_l(t, a), a));
  }
  double mx = 0;
  for (int i = 0; i < 6; ++i) mx += t.covariates(i, 0) / 6;
  double vx = 0;
  for (int i = 0; i < 6; ++i) vx += (t.covariates(i, 0) - mx) * (t.covariates(i, 0) - mx) / 5;
  const double gap =
      std::fabs(population_variance(un) - population_variance(adj) - 6.0 / (3.0 * 3.0) * beta(0) * vx * beta(0));
  o.check(gap <= 1e-10, "variance identity within 1e-10");
  o.note("SE(log_contrast)=" + fmt(lc.se) + " SE(adjusted)=" + fmt(ca.se) + " reduction=" + fmt(100 * reduction, 3) +
         "% identity gap=" + fmt(gap));
  return o;
}

// Criterion 6: TPF bias near zero at lambda = 1 and growing as lambda falls.
Outcome tpf_bias_pattern() {
  Outcome o;
  std::vector<double> abs_bias;
  for (double lambda : {1.0, 0.6, 0.2}) {
    auto s = default_parallel_scenario();
    s.lambda = lambda;
    s.replicates = 2'000;
    s.estimators = {"tpf"};
    const auto r = evaluate(s);
    const auto& row = row_of(r, "tpf");
    if (lambda == 1.0) o.check(std::fabs(row.bias) < 3 * row.mc_se_bias, "|bias| < 3 MC SE at lambda=1");
    abs_bias.push_back(std::fabs(row.bias));
    o.note("lambda=" + fmt(lambda) + ":bias=" + fmt(row.bias) + "(mcse " + fmt(row.mc_se_bias, 2) + ")");
  }
  o.check(abs_bias[2] > abs_bias[1], "|bias| increases from 0.6 to 0.2");
  return o;
}

// Criterion 7, toy part: full enumeration of a 4 x 3 stepped-wedge design.
SWPotentialTable toy_sw_table(double lambda) {
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

// Start periods of all staggered assignments with q = (1, 2, 1), by hand.
std::vector<std::vector<int>> toy_starts() {
  std::vector<std::vector<int>> out;
  for (int first = 0; first < 4; ++first) {
    for (int last = 0; last < 4; ++last) {
      if (last == first) continue;
      std::vector<int> a(4, 2);
      a[first] = 1;
      a[last] = 3;
      out.push_back(a);
    }
  }
  return out;
}

double toy_estimate(const SWPotentialTable& t, const std::vector<int>& starts, const Eigen::VectorXd& w) {
  double e = 0;
  for (int p = 1; p <= 2; ++p) {
    double s1 = 0, s0 = 0;
    int n1 = 0, n0 = 0;
    for (int i = 0; i < 4; ++i) {
      const bool treated = starts[i] <= p;
      const double y = treated ? t.lambda * t.c(i, p - 1) * t.oy0(i, p - 1) : t.oy0(i, p - 1);
      const double z = treated ? t.c(i, p - 1) * t.oz0(i, p - 1) : t.oz0(i, p - 1);
      (treated ? s1 : s0) += std::log(y / z);
      ++(treated ? n1 : n0);
    }
    e += w(p - 1) * (s1 / n1 - s0 / n0);
  }
  return e;
}

Outcome sw_oracle(const std::function<const EvaluationResult&()>& shipped_run) {
  Outcome o;
  const auto toy_start = std::chrono::steady_clock::now();
  const auto starts = toy_starts();
  const auto scheme = AssignmentScheme::stepped_wedge({1, 2, 1});
  o.check(enumerate_assignments(scheme).size() == starts.size(), "12 staggered assignments");
  double worst_mean = 0, worst_var = 0, ratio = 0;
  for (double lambda : {1.0, 0.6, 0.2}) {
    const auto t = toy_sw_table(lambda);
    const auto sigma = sw_covariance_oracle(t.control_log_contrasts(), scheme);
    double var_eq = 0, var_opt = 0;
    for (const auto& w : {equal_weights(2), optimal_weights(sigma)}) {
      std::vector<double> est;
      for (const auto& a : starts) {
        est.push_back(toy_estimate(t, a, w.w));
        o.check(std::fabs(sw_point_estimate(realize(t, a).log_contrasts(), a, {1, 2}, w.w) - est.back()) < 1e-12,
                "library estimate matches hand value");
      }
      worst_mean = std::max(worst_mean, std::fabs(average(est) - std::log(lambda)));
      const double v = population_variance(est);
      worst_var = std::max(worst_var, std::fabs(w.w.dot(sigma.sigma * w.w) - v));
      (w.kind == SWWeights::Kind::equal ? var_eq : var_opt) = v;
    }
    o.check(var_opt <= var_eq + 1e-12, "optimal variance <= equal variance");
    ratio = std::max(ratio, var_opt / var_eq);
  }
  o.check(worst_mean <= 1e-12, "mean within 1e-12");
  o.check(worst_var <= 1e-10, "w'Sigma w within 1e-10");
  const double toy_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - toy_start).count();
  o.check(toy_secs < 10.0, "toy enumeration runtime < 10 s");
  const auto& shipped = shipped_run();
  const auto& eq = row_of(shipped, "sw_equal");
  const auto& opt = row_of(shipped, "sw_optimal");
  const double reduction = 1.0 - (opt.se * opt.se) / (eq.se * eq.se);
  o.check(reduction >= 0.05, "shipped-scenario variance reduction >= 5%");
  o.note("toy " + fmt(toy_secs, 2) + " s; max|mean-log(lambda)|=" + fmt(worst_mean) + " max|w'Sw-Var|=" + fmt(worst_var) +
         " toy max Var(opt)/Var(eq)=" + fmt(ratio) + " shipped reduction=" + fmt(100 * reduction, 3) + "%");
  return o;
}

EvaluationResult sw_null_run() {
  auto s = default_sw_scenario();
  s.lambda = 1.0;
  s.replicates = 5'000;
  return evaluate(s);
}

Outcome sw_calibration(const EvaluationResult& r) {
  Outcome o;
  for (const char* name : {"sw_equal", "sw_optimal"}) {
    const auto& row = row_of(r, name);
    o.check(row.cp >= 0.93 && row.cp <= 0.96, std::string(name) + " CP in [0.93, 0.96]");
    o.note(std::string(name) + ":CP=" + fmt(row.cp) + ",bias=" + fmt(row.bias, 2) + ",SE=" + fmt(row.se, 3) +
           ",ASE=" + fmt(row.ase, 3));
  }
  return o;
}

// Criterion 9: D = A reduces to the log-contrast; simulated beta recovered.
Outcome dose_response_recovery() {
  Outcome o;
  double worst = 0;
  for (double lambda : {1.0, 0.6, 0.2}) {
    const auto t = six_cluster_table(lambda, true);
    for (const auto& a : all_assignments(6, 3)) {
      auto d = realize(t, a);
      for (auto& r : d) r.dose = static_cast<double>(r.arm);
      const double beta = dose_response_estimate(d, {}).log_estimate;
      worst = std::max(worst, std::fabs(beta - diff_means(realized_l(t, a), a)));
    }
  }
  o.check(worst <= 1e-9, "D = A reduction within 1e-9");
  auto s = default_dose_response_scenario();
  s.replicates = 1'000;
  const auto& row = row_of(evaluate(s), "dose_response");
  o.check(std::fabs(row.bias) < 3 * row.mc_se_bias, "|bias| < 3 MC SE");
  o.check(row.cp >= 0.93, "coverage >= 93%");
  o.note("reduction error=" + fmt(worst) + " beta=" + fmt(row.truth) + " bias=" + fmt(row.bias) + "(mcse " +
         fmt(row.mc_se_bias, 2) + ") CP=" + fmt(row.cp));
  return o;
}

// Criterion 10: double enumeration of the exact test under the true null.
Outcome super_uniformity() {
  Outcome o;
  const auto assignments = all_assignments(6, 3);
  double worst_excess = -1.0;
  for (double lambda : {1.0, 0.6, 0.2}) {
    const auto t = six_cluster_table(lambda);
    const auto l0 = t.control_log_contrasts();
    std::vector<double> ps;
    for (const auto& a : assignments) {
      // Under the true null the imputed L(0) is the table's L(0).
      const double obs = std::fabs(diff_means(l0, a));
      int extreme = 0;
      for (const auto& b : assignments) extreme += std::fabs(diff_means(l0, b)) >= obs - 1e-10 * (1 + obs);
      const double p = extreme / 20.0;
      auto mode = PermutationMode::exact();
      mode.allow_fast_path = false;
      const double lib = permutation_test(realize(t, a), NullSpec::relative_risk(lambda),
                                          Statistic::difference_in_means, mode)
                             .p_two_sided;
      o.check(std::fabs(lib - p) < 1e-12, "library p equals double enumeration");
      ps.push_back(p);
    }
    for (double alpha : std::set<double>(ps.begin(), ps.end())) {
      const double rate = std::count_if(ps.begin(), ps.end(), [&](double p) { return p <= alpha; }) / 20.0;
      worst_excess = std::max(worst_excess, rate - alpha);
    }
  }
  o.check(worst_excess <= 1e-12, "P(p <= alpha) <= alpha");
  o.note("max P(p<=a)-a=" + fmt(worst_excess));
  return o;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::function<Outcome()>& f, double limit_seconds) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (limit_seconds > 0) o.check(secs < limit_seconds, "runtime < " + fmt(limit_seconds) + " s");
    failures += o.pass ? 0 : 1;
    std::printf("criterion %d: %s  %s(%.2f s)\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
  };

  EvaluationResult parallel, sw;
  report(1, exact_unbiasedness, 1.0);
  report(2, odds_ratio_bias_reproduction, 0);
  report(3, tpf_round_trip, 1.0);
  report(4, [&] { parallel = parallel_null_run(); return null_calibration(parallel); }, 300.0);
  report(5, [&] { return covariate_gain(parallel); }, 0);
  report(6, tpf_bias_pattern, 0);
  // The shipped stepped-wedge run feeds both 7 and 8; its cost is timed under 8.
  double sw_seconds = 0;
  bool sw_done = false;
  auto shipped_sw = [&]() -> const EvaluationResult& {
    if (!sw_done) {
      const auto start = std::chrono::steady_clock::now();
      sw = sw_null_run();
      sw_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      sw_done = true;
    }
    return sw;
  };
  report(7, [&] { return sw_oracle(shipped_sw); }, 0);
  report(8, [&] {
    auto o = sw_calibration(shipped_sw());
    o.check(sw_seconds < 600.0, "runtime < 600 s");
    o.note("simulation " + fmt(sw_seconds, 3) + " s");
    return o;
  }, 0);
  report(9, dose_response_recovery, 0);
  report(10, super_uniformity, 1.0);
  return failures == 0 ? 0 : 1;
}
