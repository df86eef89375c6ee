#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "crtnd/io/run.hpp"

using crtnd::io::CiChoice;
using crtnd::io::Command;
using crtnd::io::ModeChoice;
using crtnd::io::RunConfig;
using crtnd::io::WeightsChoice;

namespace {

struct Flags {
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> replicates;
  std::optional<double> lambda;
  std::optional<std::string> sigma_convention;
};

void add_common(CLI::App* cmd, RunConfig& c, Flags& f) {
  cmd->add_option("--output-path", c.output_path, "JSON report path; the CSV table is written beside it");
  cmd->add_option("--alpha", f.alpha, "Significance level, in (0, 0.5); default 0.05");
  cmd->add_option("--seed", f.seed, "Seed for every random draw");
  cmd->add_flag("--continuity-correction", c.continuity_correction, "Add 0.5 to counts before taking logs");
}

void add_permutation(CLI::App* cmd, RunConfig& c) {
  const std::map<std::string, ModeChoice> modes{{"exact", ModeChoice::exact}, {"monte-carlo", ModeChoice::monte_carlo}};
  cmd->add_option_function<ModeChoice>(
         "--mode", [&c](const ModeChoice& m) { c.mode = m; }, "Permutation mode: exact or monte-carlo")
      ->transform(CLI::CheckedTransformer(modes, CLI::ignore_case));
  cmd->add_option("--draws", c.draws, "Monte Carlo draws, also used when exact enumeration is too large");
  cmd->add_option("--enumeration-cap", c.enumeration_cap, "Largest support enumerated exactly");
}

void add_ci(CLI::App* cmd, RunConfig& c) {
  const std::map<std::string, CiChoice> cis{{"normal", CiChoice::normal},
                                            {"invert-permutation", CiChoice::invert_permutation},
                                            {"invert-normal", CiChoice::invert_normal}};
  cmd->add_option_function<CiChoice>(
         "--ci-method", [&c](const CiChoice& v) { c.ci_method = v; }, "normal, invert-permutation or invert-normal")
      ->transform(CLI::CheckedTransformer(cis, CLI::ignore_case));
}

void add_simulation(CLI::App* cmd, RunConfig& c, Flags& f) {
  cmd->add_option("--input-path", c.input_path, "Scenario JSON file; the shipped default when omitted");
  cmd->add_option("--replicates", f.replicates, "Override the scenario's replicate count");
  cmd->add_option("--lambda", f.lambda, "Override the scenario's relative risk");
  cmd->add_option("--estimators", c.estimators, "Subset of estimators to evaluate")->delimiter(',');
  cmd->add_option("--threads", c.threads, "Worker threads, 0 for all cores");
  cmd->add_flag("--raw", c.raw, "Also emit per-replicate estimates");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomization-based analysis of cluster-randomized test-negative designs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", crtnd::io::version());

  RunConfig c;
  Flags f;

  auto* analyze = app.add_subcommand("analyze", "Estimate the relative risk from a parallel-arm dataset");
  analyze->add_option("--input-path", c.input_path, "Parallel-arm CSV")->required();
  analyze->add_option("--estimators", c.estimators, "odds_ratio, tpf, log_contrast, covariate_adjusted")
      ->delimiter(',');
  add_common(analyze, c, f);
  add_ci(analyze, c);
  add_permutation(analyze, c);

  auto* analyze_sw = app.add_subcommand("analyze-sw", "Weighted log-contrast estimate from a stepped-wedge panel");
  analyze_sw->add_option("--input-path", c.input_path, "Stepped-wedge CSV")->required();
  const std::map<std::string, WeightsChoice> weights{
      {"equal", WeightsChoice::equal}, {"optimal", WeightsChoice::optimal}, {"file", WeightsChoice::file}};
  analyze_sw
      ->add_option_function<WeightsChoice>(
          "--weights", [&c](const WeightsChoice& v) { c.weights = v; }, "equal, optimal or file")
      ->transform(CLI::CheckedTransformer(weights, CLI::ignore_case));
  analyze_sw->add_option("--weights-file", c.weights_file, "CSV with a 'weight' column, one row per analysis period");
  analyze_sw->add_option("--sigma-convention", f.sigma_convention, "canonical or printed");
  add_common(analyze_sw, c, f);
  add_ci(analyze_sw, c);
  add_permutation(analyze_sw, c);

  auto* dose = app.add_subcommand("dose-response", "Linear dose-response slope with the arm as instrument");
  dose->add_option("--input-path", c.input_path, "Parallel-arm CSV with a dose column")->required();
  dose->add_flag("--adjust-covariates", c.adjust_covariates, "Covariate-adjust the test statistic");
  add_common(dose, c, f);
  add_ci(dose, c);
  add_permutation(dose, c);

  auto* simulate = app.add_subcommand("simulate", "Evaluate estimators on a parallel-arm scenario");
  add_simulation(simulate, c, f);
  add_common(simulate, c, f);

  auto* simulate_sw = app.add_subcommand("simulate-sw", "Evaluate weightings on a stepped-wedge scenario");
  add_simulation(simulate_sw, c, f);
  simulate_sw->add_option("--sigma-convention", f.sigma_convention, "canonical or printed");
  add_common(simulate_sw, c, f);

  auto* sweep = app.add_subcommand("sweep", "Repeat a parallel-arm evaluation over ascertainment draws");
  add_simulation(sweep, c, f);
  sweep->add_option("--configs", c.configs, "Number of ascertainment configurations");
  add_common(sweep, c, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (analyze->parsed()) c.command = Command::analyze;
  if (analyze_sw->parsed()) c.command = Command::analyze_sw;
  if (dose->parsed()) c.command = Command::dose_response;
  if (simulate->parsed()) c.command = Command::simulate;
  if (simulate_sw->parsed()) c.command = Command::simulate_sw;
  if (sweep->parsed()) c.command = Command::sweep;
  c.alpha = f.alpha;
  c.seed = f.seed;
  c.replicates = f.replicates;
  c.lambda = f.lambda;
  c.sigma_convention = f.sigma_convention;

  return crtnd::io::run(c, std::cout, std::cerr);
}
