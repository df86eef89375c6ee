#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "crtnd/assignment.hpp"
#include "crtnd/model.hpp"
#include "crtnd/rng.hpp"
#include "crtnd/stepped_wedge.hpp"

namespace crtnd {

struct AscertainmentLaw {
  enum class DrawPolicy { once_per_study, per_replicate };

  double beta_shape_a = 0.5;
  double beta_shape_b = 0.5;
  DrawPolicy draw_policy = DrawPolicy::once_per_study;
  // Sort the drawn c_i so they increase with the baseline ratio O~Y / O~Z.
  bool couple_to_ratio = false;
  // Use these values instead of drawing (e.g. all ones).
  std::optional<std::vector<double>> fixed;
};

struct DoseDesign {
  double beta = -3.42;
  double treated_low = 0.66;
  double treated_high = 0.75;
  double control_low = 0.22;
  double control_high = 0.44;
};

struct SimScenario {
  enum class Design { parallel, stepped_wedge };

  std::string id = "scenario";
  Design design = Design::parallel;
  // Parallel: per-cluster baselines. Stepped-wedge: baseline_z only; the
  // per-period test-positive baselines are the rows of baseline_y_periods.
  std::vector<double> baseline_y;
  std::vector<double> baseline_z;
  std::vector<double> covariate;  // X_i, parallel only
  Eigen::MatrixXd baseline_y_periods;
  int treated = 0;                     // parallel m1; 0 means m / 2
  std::vector<int> starts_per_period;  // stepped-wedge q
  double lambda = 1.0;
  AscertainmentLaw ascertainment;
  bool covariate_coupling = true;
  std::uint64_t replicates = 1000;
  std::uint64_t seed = 1;
  double alpha = 0.05;
  std::vector<std::string> estimators;  // empty: all estimators of the design
  std::uint64_t permutation_draws = 500;
  SigmaConvention sigma_convention = SigmaConvention::canonical;
  std::optional<DoseDesign> dose;  // parallel only: simulate a linear dose-response instead

  int clusters() const;
  void validate() const;
};

std::string_view to_string(SimScenario::Design d) noexcept;

// Estimator names understood by evaluate().
std::vector<std::string> parallel_estimator_names();
std::vector<std::string> sw_estimator_names();

// ---------------------------------------------------------------------------
// Data generation

// Multinomial(n, p) by sequential conditional binomials.
std::vector<double> draw_multinomial(Rng& rng, std::int64_t n, const std::vector<double>& weights);

// Study-level relative ascertainment for configuration `config`.
std::vector<double> study_ascertainment(const SimScenario& scenario, std::uint64_t config = 0);

struct ParallelReplicate {
  PotentialTable table;
  Assignment assignment;
  ClusterData data;
  bool degenerate = false;
};

struct SWReplicate {
  SWPotentialTable table;
  Assignment starts;
  Panel panel;
  bool degenerate = false;
};

// Replicate `index` depends only on (scenario, study_c, index).
ParallelReplicate simulate_parallel(const SimScenario& scenario, const std::vector<double>& study_c,
                                    std::uint64_t index);
SWReplicate simulate_stepped_wedge(const SimScenario& scenario, const Eigen::MatrixXd& study_c, std::uint64_t index);
// m x T ascertainment for stepped-wedge scenarios.
Eigen::MatrixXd study_ascertainment_sw(const SimScenario& scenario, std::uint64_t config = 0);

// Linear dose-response data: L_i(a) = L_i(0) + beta D_i(a), z_i = O~Z_i(0),
// y_i = z_i exp(L_i), with potential doses drawn uniformly per arm.
ClusterData simulate_dose_response(const SimScenario& scenario, std::uint64_t index);

// ---------------------------------------------------------------------------
// Evaluation

struct MetricsRow {
  std::string scenario_id;
  std::string estimator;
  double truth = 0.0;  // log lambda, or beta for dose-response
  double bias = 0.0;
  double se = 0.0;   // SD of the estimates
  double ase = 0.0;  // mean of the SE estimates
  double por = 0.0;  // rejection rate of the no-effect null
  double cp = 0.0;   // coverage of the 1 - alpha interval
  std::optional<double> por_permutation;
  double mc_se_bias = 0.0;  // se / sqrt(n_effective)
  std::uint64_t n_effective = 0;
  std::uint64_t n_failed = 0;
};

struct ReplicateEstimate {
  std::uint64_t replicate = 0;
  std::string estimator;
  bool ok = false;
  double estimate = 0.0;
  std::optional<double> se;
  bool reject = false;
  bool covered = false;
  std::optional<bool> reject_permutation;
  std::string error;
};

struct EvaluateOptions {
  int threads = 0;  // 0: hardware concurrency
  bool keep_raw = false;
  std::uint64_t config = 0;  // ascertainment configuration index
};

struct EvaluationResult {
  std::vector<MetricsRow> rows;
  std::vector<ReplicateEstimate> raw;
  std::uint64_t degenerate_replicates = 0;
  std::vector<std::string> notes;
};

EvaluationResult evaluate(const SimScenario& scenario, const EvaluateOptions& options = {});

struct SweepSummary {
  std::string estimator;
  std::vector<double> abs_bias;  // one entry per configuration
  std::vector<double> cp;
};

struct SweepResult {
  std::vector<SweepSummary> estimators;
  std::vector<EvaluationResult> configs;
};

// evaluate() over n_configs independent ascertainment draws.
SweepResult replicate_ascertainment_sweep(const SimScenario& scenario, int n_configs,
                                          const EvaluateOptions& options = {});

// ---------------------------------------------------------------------------
// Shipped scenarios (synthetic 24-cluster baselines)

SimScenario default_parallel_scenario();
SimScenario default_sw_scenario();
SimScenario default_dose_response_scenario();

}  // namespace crtnd
