#include "crtnd/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include "crtnd/error.hpp"
#include "crtnd/estimators.hpp"
#include "crtnd/inference.hpp"
#include "crtnd/stats.hpp"

namespace crtnd {

namespace {

inline constexpr int kMaxRedraws = 100;

std::int64_t rounded_total(std::span<const double> values) {
  return std::llround(std::accumulate(values.begin(), values.end(), 0.0));
}

}  // namespace

std::string_view to_string(SimScenario::Design d) noexcept {
  return d == SimScenario::Design::parallel ? "parallel" : "stepped_wedge";
}

std::vector<std::string> parallel_estimator_names() {
  return {"odds_ratio", "tpf", "log_contrast", "covariate_adjusted"};
}

std::vector<std::string> sw_estimator_names() { return {"sw_equal", "sw_optimal"}; }

int SimScenario::clusters() const {
  return design == Design::parallel ? static_cast<int>(baseline_y.size()) : static_cast<int>(baseline_y_periods.rows());
}

void SimScenario::validate() const {
  auto check = [](bool ok, const std::string& msg) { require(ok, ErrorCode::InvalidConfig, msg); };
  const int m = clusters();
  check(m >= 4, "scenario needs at least 4 clusters");
  check(static_cast<int>(baseline_z.size()) == m, "baseline_z must have one entry per cluster");
  for (double v : baseline_z) check(v > 0.0 && std::isfinite(v), "baselines must be strictly positive");
  check(lambda > 0.0 && std::isfinite(lambda), "lambda must be positive");
  check(replicates >= 1, "replicates must be at least 1");
  check(alpha > 0.0 && alpha < 0.5, "alpha must lie in (0, 0.5)");
  check(ascertainment.beta_shape_a > 0.0 && ascertainment.beta_shape_b > 0.0, "Beta shapes must be positive");
  std::vector<std::string> known;
  if (design == Design::parallel) {
    for (double v : baseline_y) check(v > 0.0 && std::isfinite(v), "baselines must be strictly positive");
    check(treated == 0 || (treated >= 2 && treated <= m - 2), "treated count must leave 2 clusters per arm");
    check(covariate.empty() || static_cast<int>(covariate.size()) == m, "covariate must have one entry per cluster");
    if (covariate_coupling) {
      check(!covariate.empty(), "covariate coupling needs a covariate");
      for (double x : covariate) check(x > 0.0, "covariate coupling needs positive covariates");
    }
    if (ascertainment.fixed) {
      check(static_cast<int>(ascertainment.fixed->size()) == m, "fixed ascertainment needs one value per cluster");
    }
    known = parallel_estimator_names();
    if (dose) {
      known = {"dose_response"};
      check(dose->treated_low <= dose->treated_high && dose->control_low <= dose->control_high,
            "dose ranges must be ordered");
      check(dose->control_low >= 0.0 && dose->treated_high <= 1.0 && dose->treated_low >= 0.0 &&
                dose->control_high <= 1.0,
            "doses must lie in [0, 1]");
    }
  } else {
    check(baseline_y_periods.cols() >= 2, "stepped-wedge baselines need at least 2 periods");
    check((baseline_y_periods.array() > 0.0).all(), "baselines must be strictly positive");
    check(static_cast<Eigen::Index>(starts_per_period.size()) == baseline_y_periods.cols(),
          "q must have one entry per period");
    check(std::accumulate(starts_per_period.begin(), starts_per_period.end(), 0) == m, "q must sum to the cluster count");
    check(!dose.has_value(), "dose-response simulation needs a parallel design");
    if (ascertainment.fixed) {
      const auto n = static_cast<Eigen::Index>(ascertainment.fixed->size());
      check(n == m || n == m * baseline_y_periods.cols(), "fixed ascertainment needs m or m*T values");
    }
    known = sw_estimator_names();
  }
  for (const auto& e : estimators) {
    check(std::find(known.begin(), known.end(), e) != known.end(),
          "estimator '" + e + "' is not available for this design");
  }
  if (ascertainment.fixed) {
    for (double c : *ascertainment.fixed) check(c > 0.0, "ascertainment values must be positive");
  }
}

std::vector<double> draw_multinomial(Rng& rng, std::int64_t n, const std::vector<double>& weights) {
  std::vector<double> out(weights.size(), 0.0);
  double remaining_weight = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::int64_t remaining = n;
  for (std::size_t i = 0; i + 1 < weights.size() && remaining > 0; ++i) {
    const double p = std::clamp(weights[i] / remaining_weight, 0.0, 1.0);
    std::binomial_distribution<std::int64_t> draw(remaining, p);
    const auto k = draw(rng);
    out[i] = static_cast<double>(k);
    remaining -= k;
    remaining_weight -= weights[i];
  }
  if (!weights.empty()) out.back() += static_cast<double>(remaining);
  return out;
}

namespace {

// Multinomial draw where zero cells are redrawn from their marginal binomial.
// Returns false if a cell stays at zero.
bool draw_positive_counts(Rng& rng, std::int64_t n, const std::vector<double>& weights, std::vector<double>& out) {
  out = draw_multinomial(rng, n, weights);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::binomial_distribution<std::int64_t> marginal(n, weights[i] / total);
    for (int attempt = 0; out[i] == 0.0 && attempt < kMaxRedraws; ++attempt) {
      out[i] = static_cast<double>(marginal(rng));
    }
    if (out[i] == 0.0) return false;
  }
  return true;
}

std::vector<double> draw_c(Rng& rng, const SimScenario& s, int n) {
  std::vector<double> c(static_cast<std::size_t>(n));
  for (auto& v : c) v = draw_beta(rng, s.ascertainment.beta_shape_a, s.ascertainment.beta_shape_b);
  return c;
}

std::vector<double> coupled(std::vector<double> c, const std::vector<double>& ratio) {
  std::vector<std::size_t> order(ratio.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return ratio[a] < ratio[b]; });
  std::sort(c.begin(), c.end());
  std::vector<double> out(c.size());
  for (std::size_t k = 0; k < order.size(); ++k) out[order[k]] = c[k];
  return out;
}

std::vector<double> parallel_ratio(const SimScenario& s) {
  std::vector<double> r(s.baseline_y.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = s.baseline_y[i] / s.baseline_z[i];
  return r;
}

int treated_count(const SimScenario& s) { return s.treated > 0 ? s.treated : s.clusters() / 2; }

}  // namespace

std::vector<double> study_ascertainment(const SimScenario& scenario, std::uint64_t config) {
  if (scenario.ascertainment.fixed) return *scenario.ascertainment.fixed;
  Rng rng = make_stream(scenario.seed, StreamDomain::study, config);
  auto c = draw_c(rng, scenario, scenario.clusters());
  if (scenario.ascertainment.couple_to_ratio) c = coupled(std::move(c), parallel_ratio(scenario));
  return c;
}

Eigen::MatrixXd study_ascertainment_sw(const SimScenario& scenario, std::uint64_t config) {
  const auto m = static_cast<Eigen::Index>(scenario.clusters());
  const Eigen::Index t = scenario.baseline_y_periods.cols();
  Eigen::MatrixXd c(m, t);
  if (scenario.ascertainment.fixed) {
    const auto& f = *scenario.ascertainment.fixed;
    const bool per_cluster = static_cast<Eigen::Index>(f.size()) == m;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index k = 0; k < t; ++k) c(i, k) = per_cluster ? f[static_cast<std::size_t>(i)] : f[static_cast<std::size_t>(i * t + k)];
    }
    return c;
  }
  Rng rng = make_stream(scenario.seed, StreamDomain::study, config);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = 0; k < t; ++k) {
      c(i, k) = draw_beta(rng, scenario.ascertainment.beta_shape_a, scenario.ascertainment.beta_shape_b);
    }
  }
  return c;
}

ParallelReplicate simulate_parallel(const SimScenario& s, const std::vector<double>& study_c, std::uint64_t index) {
  require(s.design == SimScenario::Design::parallel, ErrorCode::InvalidConfig, "scenario is not a parallel design");
  const int m = s.clusters();
  Rng rng = make_stream(s.seed, StreamDomain::replicate, index);
  ParallelReplicate out;
  auto& table = out.table;
  table.lambda = s.lambda;
  if (s.ascertainment.draw_policy == AscertainmentLaw::DrawPolicy::per_replicate && !s.ascertainment.fixed) {
    table.c = draw_c(rng, s, m);
    if (s.ascertainment.couple_to_ratio) table.c = coupled(table.c, parallel_ratio(s));
  } else {
    table.c = study_c;
  }
  const bool ok_y = draw_positive_counts(rng, rounded_total(s.baseline_y), s.baseline_y, table.oy0);
  const bool ok_z = draw_positive_counts(rng, rounded_total(s.baseline_z), s.baseline_z, table.oz0);
  if (!s.covariate.empty()) {
    table.covariates = Eigen::Map<const Eigen::VectorXd>(s.covariate.data(), m);
  } else {
    table.covariates = Eigen::MatrixXd(m, 0);
  }
  if (s.covariate_coupling) {
    for (int i = 0; i < m; ++i) {
      const auto k = static_cast<std::size_t>(i);
      table.oy0[k] *= 2.0 * s.covariate[k];
      table.oz0[k] /= 2.0 * s.covariate[k];
    }
  }
  out.assignment = sample_assignment(AssignmentScheme::parallel(m, treated_count(s)), rng);
  out.degenerate = !(ok_y && ok_z);
  if (!out.degenerate) out.data = realize(table, out.assignment);
  return out;
}

SWReplicate simulate_stepped_wedge(const SimScenario& s, const Eigen::MatrixXd& study_c, std::uint64_t index) {
  require(s.design == SimScenario::Design::stepped_wedge, ErrorCode::InvalidConfig,
          "scenario is not a stepped-wedge design");
  const auto m = static_cast<Eigen::Index>(s.clusters());
  const Eigen::Index periods = s.baseline_y_periods.cols();
  Rng rng = make_stream(s.seed, StreamDomain::replicate, index);
  SWReplicate out;
  auto& table = out.table;
  table.lambda = s.lambda;
  if (s.ascertainment.draw_policy == AscertainmentLaw::DrawPolicy::per_replicate && !s.ascertainment.fixed) {
    table.c.resize(m, periods);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index t = 0; t < periods; ++t) {
        table.c(i, t) = draw_beta(rng, s.ascertainment.beta_shape_a, s.ascertainment.beta_shape_b);
      }
    }
  } else {
    table.c = study_c;
  }
  table.oy0.resize(m, periods);
  table.oz0.resize(m, periods);
  const Eigen::VectorXd n_y = s.baseline_y_periods.colwise().sum();
  const double n_z = std::accumulate(s.baseline_z.begin(), s.baseline_z.end(), 0.0);
  bool ok = true;
  std::vector<double> counts;
  for (Eigen::Index t = 0; t < periods; ++t) {
    // Test-negative baselines follow the test-positive trend: O~Z_it = O~Z_i n_t / n_T.
    const double scale = n_y(t) / n_y(periods - 1);
    std::vector<double> wy(static_cast<std::size_t>(m));
    std::vector<double> wz(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
      wy[static_cast<std::size_t>(i)] = s.baseline_y_periods(i, t);
      wz[static_cast<std::size_t>(i)] = s.baseline_z[static_cast<std::size_t>(i)] * scale;
    }
    ok = draw_positive_counts(rng, std::llround(n_y(t)), wy, counts) && ok;
    for (Eigen::Index i = 0; i < m; ++i) table.oy0(i, t) = counts[static_cast<std::size_t>(i)];
    ok = draw_positive_counts(rng, std::llround(n_z * scale), wz, counts) && ok;
    for (Eigen::Index i = 0; i < m; ++i) table.oz0(i, t) = counts[static_cast<std::size_t>(i)];
  }
  out.starts = sample_assignment(AssignmentScheme::stepped_wedge(s.starts_per_period), rng);
  out.degenerate = !ok;
  if (ok) out.panel = realize(table, out.starts);
  return out;
}

ClusterData simulate_dose_response(const SimScenario& s, std::uint64_t index) {
  require(s.dose.has_value(), ErrorCode::InvalidConfig, "scenario has no dose design");
  SimScenario base = s;
  base.lambda = 1.0;
  base.ascertainment.fixed = std::vector<double>(static_cast<std::size_t>(s.clusters()), 1.0);
  const auto rep = simulate_parallel(base, *base.ascertainment.fixed, index);
  if (rep.degenerate) return {};
  // A separate stream keeps the dose draws from shifting the count draws.
  Rng rng = make_stream(s.seed, StreamDomain::replicate, index ^ (std::uint64_t{1} << 63));
  const auto& d = *s.dose;
  std::uniform_real_distribution<double> treated_dose(d.treated_low, d.treated_high);
  std::uniform_real_distribution<double> control_dose(d.control_low, d.control_high);
  ClusterData data = rep.data;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double d1 = treated_dose(rng);
    const double d0 = control_dose(rng);
    const double dose = rep.assignment[i] == 1 ? d1 : d0;
    const double l0 = std::log(rep.table.oy0[i]) - std::log(rep.table.oz0[i]);
    data[i].dose = dose;
    data[i].z_count = rep.table.oz0[i];
    data[i].y_count = rep.table.oz0[i] * std::exp(l0 + d.beta * dose);
  }
  return data;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

struct Context {
  const SimScenario& s;
  double truth;
  double z;
};

void set_normal(ReplicateEstimate& r, const Context& ctx, double estimate, double se, double null_value) {
  r.estimate = estimate;
  r.se = se;
  r.reject = normal_p_value(estimate, null_value, se).p <= ctx.s.alpha;
  r.covered = std::fabs(estimate - ctx.truth) <= ctx.z * se;
  r.ok = true;
}

PermutationMode mc_mode(const SimScenario& s, std::uint64_t index, std::size_t k) {
  return PermutationMode::monte_carlo(s.permutation_draws, s.seed, index * 64 + k);
}

ReplicateEstimate eval_parallel(const std::string& name, std::size_t k, const ClusterData& data, const Context& ctx,
                                std::uint64_t index) {
  ReplicateEstimate r;
  r.replicate = index;
  r.estimator = name;
  const auto& s = ctx.s;
  const EstimatorOptions opts{false, s.alpha};
  const auto one = NullSpec::relative_risk(1.0);
  if (name == "log_contrast") {
    const auto e = log_contrast_estimate(data, opts);
    set_normal(r, ctx, e.log_estimate, *e.se_log, 0.0);
    r.reject_permutation =
        permutation_test(data, one, Statistic::difference_in_means, PermutationMode::exact()).p_two_sided <= s.alpha;
  } else if (name == "covariate_adjusted") {
    const auto e = covariate_adjusted_estimate(data, std::nullopt, opts).first;
    set_normal(r, ctx, e.log_estimate, *e.se_log, 0.0);
    if (s.permutation_draws > 0) {
      const auto adj = NullSpec::relative_risk(1.0, NullSpec::Adjustment::covariates);
      r.reject_permutation =
          permutation_test(data, adj, Statistic::difference_in_means, mc_mode(s, index, k)).p_two_sided <= s.alpha;
    }
  } else if (name == "odds_ratio") {
    const auto e = odds_ratio_estimate(data, opts);
    const double se = odds_ratio_permutation_se(data, mc_mode(s, index, k));
    set_normal(r, ctx, e.log_estimate, se, 0.0);
    r.reject_permutation =
        permutation_test(data, one, Statistic::odds_ratio, mc_mode(s, index, k + 32)).p_two_sided <= s.alpha;
  } else if (name == "tpf") {
    const auto e = tpf_estimate(data, opts);
    r.estimate = e.log_estimate;
    // No analytic SE: test and interval both come from the permutation test.
    r.reject = permutation_test(data, one, Statistic::tpf, PermutationMode::exact()).p_two_sided <= s.alpha;
    r.covered = permutation_test(data, NullSpec::relative_risk(s.lambda), Statistic::tpf, PermutationMode::exact())
                    .p_two_sided > s.alpha;
    r.reject_permutation = r.reject;
    r.ok = true;
  } else if (name == "dose_response") {
    DoseResponseOptions d;
    d.alpha = s.alpha;
    const auto e = dose_response_estimate(data, d);
    r.estimate = e.log_estimate;
    r.se = e.se_log;
    r.reject = e.p_value.value_or(1.0) <= s.alpha;
    r.covered = e.ci && e.ci->low <= ctx.truth && ctx.truth <= e.ci->high;
    r.ok = true;
  } else {
    fail(ErrorCode::InvalidConfig, "unknown estimator " + name);
  }
  return r;
}

ReplicateEstimate eval_sw(const std::string& name, const SWReplicate& rep, const Context& ctx, std::uint64_t index) {
  ReplicateEstimate r;
  r.replicate = index;
  r.estimator = name;
  const SWOptions opts{ctx.s.sigma_convention, ctx.s.alpha, false};
  const auto scheme = AssignmentScheme::stepped_wedge(ctx.s.starts_per_period);
  SWWeights w = equal_weights(static_cast<int>(scheme.analysis_periods().size()));
  if (name == "sw_optimal") {
    // Known truth: the oracle covariance of the replicate's own L(0).
    try {
      w = optimal_weights(sw_covariance_oracle(rep.table.control_log_contrasts(), scheme));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularCovariance) throw;
      w.notes.push_back("singular covariance; equal weights used");
    }
  } else if (name != "sw_equal") {
    fail(ErrorCode::InvalidConfig, "unknown estimator " + name);
  }
  const auto e = sw_log_contrast(rep.panel, w, opts);
  set_normal(r, ctx, e.log_estimate, *e.se_log, 0.0);
  return r;
}

template <typename F>
void parallel_for(std::uint64_t n, int threads, F&& body) {
  const auto hw = std::max(1u, std::thread::hardware_concurrency());
  const auto k = static_cast<unsigned>(threads > 0 ? threads : static_cast<int>(hw));
  if (k <= 1 || n <= 1) {
    for (std::uint64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::uint64_t>(k, n); ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const auto i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

MetricsRow aggregate(const SimScenario& s, const std::string& name, double truth,
                     const std::vector<std::vector<ReplicateEstimate>>& results, std::size_t k,
                     std::uint64_t degenerate) {
  MetricsRow row;
  row.scenario_id = s.id;
  row.estimator = name;
  row.truth = truth;
  stats::CompensatedSum est_sum;
  stats::CompensatedSum se_sum;
  std::uint64_t se_count = 0, reject = 0, covered = 0, perm_count = 0, perm_reject = 0;
  for (const auto& rep : results) {
    if (rep.empty() || !rep[k].ok) continue;
    const auto& r = rep[k];
    est_sum.add(r.estimate);
    ++row.n_effective;
    if (r.se) {
      se_sum.add(*r.se);
      ++se_count;
    }
    reject += r.reject ? 1 : 0;
    covered += r.covered ? 1 : 0;
    if (r.reject_permutation) {
      ++perm_count;
      perm_reject += *r.reject_permutation ? 1 : 0;
    }
  }
  row.n_failed = s.replicates - degenerate - row.n_effective;
  if (row.n_effective == 0) return row;
  const double n = static_cast<double>(row.n_effective);
  const double mean = est_sum.value() / n;
  stats::CompensatedSum sq;
  for (const auto& rep : results) {
    if (rep.empty() || !rep[k].ok) continue;
    sq.add((rep[k].estimate - mean) * (rep[k].estimate - mean));
  }
  row.bias = mean - truth;
  row.se = row.n_effective > 1 ? std::sqrt(sq.value() / (n - 1.0)) : 0.0;
  row.ase = se_count > 0 ? se_sum.value() / static_cast<double>(se_count) : std::nan("");
  row.por = static_cast<double>(reject) / n;
  row.cp = static_cast<double>(covered) / n;
  if (perm_count > 0) row.por_permutation = static_cast<double>(perm_reject) / static_cast<double>(perm_count);
  row.mc_se_bias = row.se / std::sqrt(n);
  return row;
}

}  // namespace

EvaluationResult evaluate(const SimScenario& scenario, const EvaluateOptions& options) {
  scenario.validate();
  const bool sw = scenario.design == SimScenario::Design::stepped_wedge;
  const bool dose = scenario.dose.has_value();
  std::vector<std::string> names = scenario.estimators;
  if (names.empty()) names = dose ? std::vector<std::string>{"dose_response"} : (sw ? sw_estimator_names() : parallel_estimator_names());
  const double truth = dose ? scenario.dose->beta : std::log(scenario.lambda);
  const Context ctx{scenario, truth, stats::normal_quantile(1.0 - scenario.alpha / 2.0)};

  std::vector<double> c_parallel;
  Eigen::MatrixXd c_sw;
  if (sw) {
    c_sw = study_ascertainment_sw(scenario, options.config);
  } else if (!dose) {
    c_parallel = study_ascertainment(scenario, options.config);
  }

  const auto n = scenario.replicates;
  std::vector<std::vector<ReplicateEstimate>> results(n);
  std::vector<char> degenerate(n, 0);
  parallel_for(n, options.threads, [&](std::uint64_t i) {
    std::vector<ReplicateEstimate> row;
    auto run = [&](std::size_t k, auto&& f) {
      try {
        row.push_back(f());
      } catch (const Error& e) {
        ReplicateEstimate r;
        r.replicate = i;
        r.estimator = names[k];
        r.error = std::string(to_string(e.code())) + ": " + e.what();
        row.push_back(std::move(r));
      }
    };
    if (sw) {
      const auto rep = simulate_stepped_wedge(scenario, c_sw, i);
      if (rep.degenerate) {
        degenerate[i] = 1;
        return;
      }
      for (std::size_t k = 0; k < names.size(); ++k) run(k, [&] { return eval_sw(names[k], rep, ctx, i); });
    } else {
      ClusterData data;
      if (dose) {
        data = simulate_dose_response(scenario, i);
      } else {
        auto rep = simulate_parallel(scenario, c_parallel, i);
        if (!rep.degenerate) data = std::move(rep.data);
      }
      if (data.empty()) {
        degenerate[i] = 1;
        return;
      }
      for (std::size_t k = 0; k < names.size(); ++k) run(k, [&] { return eval_parallel(names[k], k, data, ctx, i); });
    }
    results[i] = std::move(row);
  });

  EvaluationResult out;
  out.degenerate_replicates = static_cast<std::uint64_t>(std::count(degenerate.begin(), degenerate.end(), 1));
  require(out.degenerate_replicates * 100 <= n, ErrorCode::DegenerateReplicateLimit,
          std::to_string(out.degenerate_replicates) + " of " + std::to_string(n) +
              " replicates kept a zero count after redrawing (limit 1%)");
  if (out.degenerate_replicates > 0) {
    out.notes.push_back(std::to_string(out.degenerate_replicates) + " degenerate replicate(s) excluded");
  }
  for (std::size_t k = 0; k < names.size(); ++k) {
    out.rows.push_back(aggregate(scenario, names[k], truth, results, k, out.degenerate_replicates));
  }
  if (options.keep_raw) {
    for (auto& rep : results) {
      for (auto& r : rep) out.raw.push_back(std::move(r));
    }
  }
  return out;
}

SweepResult replicate_ascertainment_sweep(const SimScenario& scenario, int n_configs, const EvaluateOptions& options) {
  require(n_configs >= 1, ErrorCode::InvalidConfig, "sweep needs at least one configuration");
  require(scenario.design == SimScenario::Design::parallel && !scenario.dose, ErrorCode::InvalidConfig,
          "the ascertainment sweep runs on parallel scenarios");
  SweepResult out;
  for (int cfg = 0; cfg < n_configs; ++cfg) {
    EvaluateOptions o = options;
    o.config = static_cast<std::uint64_t>(cfg);
    out.configs.push_back(evaluate(scenario, o));
  }
  for (std::size_t k = 0; k < out.configs.front().rows.size(); ++k) {
    SweepSummary s;
    s.estimator = out.configs.front().rows[k].estimator;
    for (const auto& c : out.configs) {
      s.abs_bias.push_back(std::fabs(c.rows[k].bias));
      s.cp.push_back(c.rows[k].cp);
    }
    out.estimators.push_back(std::move(s));
  }
  return out;
}

}  // namespace crtnd
