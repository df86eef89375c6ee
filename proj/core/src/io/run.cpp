#include "crtnd/io/run.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "crtnd/error.hpp"
#include "crtnd/io/csv.hpp"
#include "crtnd/io/dataset.hpp"
#include "crtnd/io/scenario_json.hpp"
#include "crtnd/simulation.hpp"
#include "crtnd/stepped_wedge.hpp"
#include "json_convert.hpp"

namespace crtnd::io {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kDefaultAlpha = 0.05;
constexpr std::uint64_t kDefaultSeed = 1;

std::vector<std::string> analyze_default_estimators() {
  return {"odds_ratio", "tpf", "log_contrast", "covariate_adjusted"};
}

bool is_simulation(Command c) {
  return c == Command::simulate || c == Command::simulate_sw || c == Command::sweep;
}

SigmaConvention parse_convention(const std::string& s) {
  if (s == "canonical") return SigmaConvention::canonical;
  if (s == "printed") return SigmaConvention::printed;
  fail(ErrorCode::InvalidConfig, "sigma-convention must be canonical or printed, got '" + s + "'");
}

std::string fmt(double v, int precision = 6) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

std::string fmt(const std::optional<double>& v, int precision = 6) { return v ? fmt(*v, precision) : "-"; }

fs::path csv_sibling(const std::string& output_path, const std::string& suffix = "") {
  fs::path p(output_path);
  return p.parent_path() / (p.stem().string() + suffix + ".csv");
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::InvalidConfig, "cannot write '" + path.string() + "'");
  out << text;
  require(static_cast<bool>(out), ErrorCode::InvalidConfig, "failed writing '" + path.string() + "'");
}

json config_json(const RunConfig& c, std::uint64_t seed, double alpha) {
  json j;
  j["command"] = std::string(to_string(c.command));
  j["input_path"] = c.input_path;
  j["output_path"] = c.output_path;
  j["alpha"] = alpha;
  j["ci_method"] = std::string(to_string(c.ci_method));
  j["mode"] = std::string(to_string(c.mode));
  j["draws"] = c.draws;
  j["enumeration_cap"] = c.enumeration_cap;
  j["seed"] = seed;
  j["continuity_correction"] = c.continuity_correction;
  j["weights"] = std::string(to_string(c.weights));
  j["weights_file"] = c.weights_file;
  j["sigma_convention"] = c.sigma_convention ? json(*c.sigma_convention) : json(nullptr);
  j["adjust_covariates"] = c.adjust_covariates;
  j["estimators"] = c.estimators;
  j["replicates"] = c.replicates ? json(*c.replicates) : json(nullptr);
  j["lambda"] = c.lambda ? json(*c.lambda) : json(nullptr);
  j["configs"] = c.configs;
  j["raw"] = c.raw;
  return j;
}

json envelope(const RunConfig& c, std::uint64_t seed, double alpha) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["software"] = {{"name", "crtnd"}, {"version", version()}};
  j["config"] = config_json(c, seed, alpha);
  return j;
}

// Exact mode falls back to Monte Carlo when the support exceeds the cap.
class ModeSelector {
 public:
  ModeSelector(const RunConfig& c, std::uint64_t seed) : config_(c), seed_(seed) {}

  PermutationMode mode(std::uint64_t stream) const {
    if (config_.mode == ModeChoice::monte_carlo || fell_back_) {
      return PermutationMode::monte_carlo(config_.draws, seed_, stream);
    }
    return PermutationMode::exact(config_.enumeration_cap);
  }

  template <class F>
  auto run(std::uint64_t stream, std::vector<std::string>& notes, F&& f) -> decltype(f(PermutationMode{})) {
    try {
      return f(mode(stream));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SupportTooLarge || config_.mode == ModeChoice::monte_carlo) throw;
      fell_back_ = true;
      notes.push_back("exact enumeration exceeds the cap of " + std::to_string(config_.enumeration_cap) +
                      " assignments; used Monte Carlo with " + std::to_string(config_.draws) + " draws");
      return f(mode(stream));
    }
  }

 private:
  const RunConfig& config_;
  std::uint64_t seed_;
  bool fell_back_ = false;
};

struct AnalyzeRow {
  std::string estimator;
  std::optional<EstimateReport> report;
  std::optional<PermutationResult> permutation;
  std::string error_code;
  std::string error;
};

struct Outcome {
  json report;
  std::string csv;
  std::string table;
  std::string raw_csv;
  bool computational_failure = false;
};

void apply_inversion(EstimateReport& r, const InversionResult& inv) {
  r.ci = inv.interval;
  r.ci_method = CiMethod::test_inversion;
  r.diagnostics.notes.insert(r.diagnostics.notes.end(), inv.notes.begin(), inv.notes.end());
  r.diagnostics.values["inversion_evaluations"] = inv.evaluations;
}

AnalyzeRow analyze_one(const std::string& name, const ClusterData& data, const RunConfig& c, double alpha,
                       ModeSelector& modes) {
  AnalyzeRow row;
  row.estimator = name;
  const EstimatorOptions eopts{c.continuity_correction, alpha};
  const bool cc = c.continuity_correction;
  try {
    EstimateReport r;
    std::vector<std::string> notes;
    Method method = Method::log_contrast;
    Statistic statistic = Statistic::difference_in_means;
    auto adjustment = NullSpec::Adjustment::none;
    if (name == "log_contrast") {
      r = log_contrast_estimate(data, eopts);
    } else if (name == "covariate_adjusted") {
      auto [rep, fit] = covariate_adjusted_estimate(data, std::nullopt, eopts);
      r = std::move(rep);
      r.diagnostics.vectors["beta_hat"] = std::vector<double>(fit.beta_hat.data(), fit.beta_hat.data() + fit.beta_hat.size());
      method = Method::covariate_adjusted;
      adjustment = NullSpec::Adjustment::covariates;
    } else if (name == "odds_ratio") {
      r = odds_ratio_estimate(data, eopts);
      method = Method::odds_ratio;
      statistic = Statistic::odds_ratio;
      const double se = modes.run(1, notes, [&](const PermutationMode& m) { return odds_ratio_permutation_se(data, m, cc); });
      r.se_log = se;
      r.ci = normal_interval(r.log_estimate, se, alpha, true);
      r.ci_method = CiMethod::normal;
      r.p_value = normal_p_value(r.log_estimate, 0.0, se).p;
      notes.push_back("standard error is the permutation dispersion of the log odds ratio at lambda-hat");
    } else if (name == "tpf") {
      r = tpf_estimate(data, eopts);
      method = Method::tpf;
      statistic = Statistic::tpf;
    } else {
      fail(ErrorCode::InvalidConfig, "unknown estimator '" + name + "'");
    }

    const bool inversion_needed = c.ci_method == CiChoice::invert_permutation || method == Method::tpf;
    if (method == Method::tpf && c.ci_method != CiChoice::invert_permutation) {
      notes.push_back("tpf has no analytic standard error; interval from permutation test inversion");
    }
    if (inversion_needed) {
      const auto inv = modes.run(0, notes, [&](const PermutationMode& m) {
        return invert_ci(data, method, alpha, InversionTest::permutation, m, {}, cc);
      });
      apply_inversion(r, inv);
    } else if (c.ci_method == CiChoice::invert_normal) {
      if (method == Method::odds_ratio) {
        notes.push_back("Normal-test inversion with a fixed standard error equals the Normal interval");
      } else {
        apply_inversion(r, invert_ci(data, method, alpha, InversionTest::normal, {}, {}, cc));
      }
    }
    row.permutation = modes.run(0, notes, [&](const PermutationMode& m) {
      return permutation_test(data, NullSpec::relative_risk(1.0, adjustment), statistic, m, cc);
    });
    if (method == Method::tpf) r.p_value = row.permutation->p_two_sided;
    r.diagnostics.notes.insert(r.diagnostics.notes.end(), notes.begin(), notes.end());
    row.report = std::move(r);
  } catch (const Error& e) {
    if (is_validation_error(e.code())) throw;
    row.error_code = std::string(to_string(e.code()));
    row.error = e.what();
  }
  return row;
}

std::string estimate_csv(const std::vector<AnalyzeRow>& rows) {
  std::ostringstream os;
  os << "estimator,estimate,log_estimate,se_log,ci_low,ci_high,ci_method,alpha,p_value,p_permutation,error\n";
  for (const auto& r : rows) {
    os << csv_field(r.estimator) << ',';
    if (r.report) {
      const auto& e = *r.report;
      os << format_number(e.natural_estimate()) << ',' << format_number(e.log_estimate) << ','
         << (e.se_log ? format_number(*e.se_log) : "") << ',' << (e.ci ? format_number(e.ci->low) : "") << ','
         << (e.ci ? format_number(e.ci->high) : "") << ',' << to_string(e.ci_method) << ','
         << format_number(e.alpha) << ',' << (e.p_value ? format_number(*e.p_value) : "") << ','
         << (r.permutation ? format_number(r.permutation->p_two_sided) : "") << ",\n";
    } else {
      os << ",,,,,,,,," << csv_field(r.error_code) << '\n';
    }
  }
  return os.str();
}

std::string estimate_table(const std::vector<AnalyzeRow>& rows, bool dose) {
  std::ostringstream os;
  os << std::left << std::setw(20) << "estimator" << std::right << std::setw(12) << (dose ? "beta" : "lambda")
     << std::setw(12) << "se(log)" << std::setw(12) << "ci_low" << std::setw(12) << "ci_high" << std::setw(12)
     << "p" << std::setw(12) << "p_perm" << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(20) << r.estimator << std::right;
    if (r.report) {
      const auto& e = *r.report;
      os << std::setw(12) << fmt(e.natural_estimate()) << std::setw(12) << fmt(e.se_log) << std::setw(12)
         << (e.ci ? fmt(e.ci->low) : "-") << std::setw(12) << (e.ci ? fmt(e.ci->high) : "-") << std::setw(12)
         << fmt(e.p_value, 4) << std::setw(12) << (r.permutation ? fmt(r.permutation->p_two_sided, 4) : "-");
    } else {
      os << "  failed: " << r.error_code;
    }
    os << '\n';
  }
  return os.str();
}

json rows_json(const std::vector<AnalyzeRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json j;
    j["estimator"] = r.estimator;
    if (r.report) {
      j["report"] = to_json(*r.report);
      j["permutation_test"] = r.permutation ? to_json(*r.permutation) : json(nullptr);
    } else {
      j["error"] = {{"code", r.error_code}, {"message", r.error}};
    }
    out.push_back(j);
  }
  return out;
}

ClusterData load_parallel(const std::string& path) {
  auto ds = parse_dataset(fs::path(path));
  require(std::holds_alternative<ClusterData>(ds), ErrorCode::SchemaError,
          path + ": expected a parallel-arm dataset, found the stepped-wedge schema");
  return std::get<ClusterData>(std::move(ds));
}

Outcome run_analyze(const RunConfig& c) {
  const double alpha = c.alpha.value_or(kDefaultAlpha);
  const std::uint64_t seed = c.seed.value_or(kDefaultSeed);
  const auto data = load_parallel(c.input_path);
  const bool explicit_list = !c.estimators.empty();
  const auto names = explicit_list ? c.estimators : analyze_default_estimators();
  const std::size_t p = data.empty() ? 0 : data.front().covariates.size();

  Outcome o;
  o.report = envelope(c, seed, alpha);
  json notes = json::array();
  ModeSelector modes(c, seed);
  std::vector<AnalyzeRow> rows;
  for (const auto& name : names) {
    if (name == "covariate_adjusted" && p == 0) {
      require(!explicit_list, ErrorCode::InvalidConfig, "covariate_adjusted needs covariate columns x1..xp");
      notes.push_back("covariate_adjusted skipped: the dataset has no covariate columns");
      continue;
    }
    rows.push_back(analyze_one(name, data, c, alpha, modes));
    if (!rows.back().report) o.computational_failure = true;
  }
  o.report["clusters"] = data.size();
  o.report["estimates"] = rows_json(rows);
  o.report["notes"] = notes;
  o.csv = estimate_csv(rows);
  o.table = estimate_table(rows, false);
  return o;
}

SWWeights read_weights_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::InvalidConfig, "cannot open weights file '" + path + "'");
  const auto t = read_csv(in, path);
  const auto it = std::find(t.header.begin(), t.header.end(), "weight");
  require(it != t.header.end(), ErrorCode::SchemaError, path + ": weights file needs a 'weight' column");
  const auto col = static_cast<std::size_t>(it - t.header.begin());
  SWWeights w;
  w.kind = SWWeights::Kind::file;
  w.w.resize(static_cast<Eigen::Index>(t.rows.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    double v = 0.0;
    require(col < t.rows[r].size() && parse_number(t.rows[r][col], v), ErrorCode::ParseError,
            path + ":" + std::to_string(t.line_numbers[r]) + " (column weight): not a finite number");
    w.w(static_cast<Eigen::Index>(r)) = v;
  }
  return w;
}

Outcome run_analyze_sw(const RunConfig& c) {
  const double alpha = c.alpha.value_or(kDefaultAlpha);
  const std::uint64_t seed = c.seed.value_or(kDefaultSeed);
  const auto convention = parse_convention(c.sigma_convention.value_or("canonical"));
  auto ds = parse_dataset(fs::path(c.input_path));
  require(std::holds_alternative<Panel>(ds), ErrorCode::SchemaError,
          c.input_path + ": expected the stepped-wedge schema, found a parallel-arm dataset");
  const Panel panel = std::get<Panel>(std::move(ds));
  const auto scheme = sw_scheme(panel.start_periods(), panel.periods());
  const int k = static_cast<int>(scheme.analysis_periods().size());
  require(k > 0, ErrorCode::InvalidScheme, "no period has both treated and untreated clusters");

  Outcome o;
  o.report = envelope(c, seed, alpha);
  SWWeights w;
  switch (c.weights) {
    case WeightsChoice::equal:
      w = equal_weights(k);
      break;
    case WeightsChoice::optimal:
      try {
        w = optimal_weights(sw_covariance_estimate(panel, convention, c.continuity_correction));
        w.kind = SWWeights::Kind::optimal_plugin;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SingularCovariance && e.code() != ErrorCode::GroupTooSmall) throw;
        w = equal_weights(k);
        w.notes.push_back(std::string("optimal weights unavailable (") + std::string(to_string(e.code())) +
                          "); fell back to equal weights");
      }
      break;
    case WeightsChoice::file:
      w = read_weights_file(c.weights_file);
      require(w.w.size() == k, ErrorCode::DimensionMismatch,
              "weights file has " + std::to_string(w.w.size()) + " weights for " + std::to_string(k) +
                  " analysis periods");
      break;
  }

  AnalyzeRow row;
  row.estimator = "sw_log_contrast";
  try {
    auto r = sw_log_contrast(panel, w, SWOptions{convention, alpha, c.continuity_correction});
    std::vector<std::string> notes = w.notes;
    ModeSelector modes(c, seed);
    auto p_at = [&](double theta) {
      return modes.run(0, notes, [&](const PermutationMode& m) {
        return sw_permutation_test(panel, w, std::exp(theta), m, c.continuity_correction);
      });
    };
    row.permutation = p_at(0.0);
    if (c.ci_method == CiChoice::invert_permutation) {
      const double scale = r.se_log && *r.se_log > 0.0 ? *r.se_log : 0.1;
      auto inv = invert_pvalue([&](double t) { return p_at(t).p_two_sided; }, r.log_estimate, scale, alpha);
      inv.interval = {std::exp(inv.interval.low), std::exp(inv.interval.high)};
      apply_inversion(r, inv);
    } else if (c.ci_method == CiChoice::invert_normal) {
      const double se = r.se_log.value_or(0.0);
      const double center = r.log_estimate;
      auto inv = invert_pvalue([&](double t) { return normal_p_value(center, t, se).p; }, center,
                               se > 0.0 ? se : 0.1, alpha);
      inv.interval = {std::exp(inv.interval.low), std::exp(inv.interval.high)};
      apply_inversion(r, inv);
    }
    r.diagnostics.notes.insert(r.diagnostics.notes.end(), notes.begin(), notes.end());
    row.report = std::move(r);
  } catch (const Error& e) {
    if (is_validation_error(e.code())) throw;
    row.error_code = std::string(to_string(e.code()));
    row.error = e.what();
    o.computational_failure = true;
  }
  o.report["clusters"] = panel.clusters();
  o.report["periods"] = panel.periods();
  o.report["sigma_convention"] = std::string(to_string(convention));
  o.report["weights"] = to_json(w);
  o.report["estimates"] = rows_json({row});
  o.csv = estimate_csv({row});
  o.table = estimate_table({row}, false);
  return o;
}

Outcome run_dose_response(const RunConfig& c) {
  const double alpha = c.alpha.value_or(kDefaultAlpha);
  const std::uint64_t seed = c.seed.value_or(kDefaultSeed);
  const auto data = load_parallel(c.input_path);
  Outcome o;
  o.report = envelope(c, seed, alpha);
  ModeSelector modes(c, seed);
  AnalyzeRow row;
  row.estimator = "dose_response";
  try {
    std::vector<std::string> notes;
    DoseResponseOptions opts;
    opts.alpha = alpha;
    opts.adjust_covariates = c.adjust_covariates;
    opts.test = c.ci_method == CiChoice::invert_permutation ? InversionTest::permutation : InversionTest::normal;
    opts.continuity_correction = c.continuity_correction;
    auto r = modes.run(0, notes, [&](const PermutationMode& m) {
      opts.mode = m;
      return dose_response_estimate(data, opts);
    });
    const auto adj = c.adjust_covariates ? NullSpec::Adjustment::covariates : NullSpec::Adjustment::none;
    row.permutation = modes.run(0, notes, [&](const PermutationMode& m) {
      return permutation_test(data, NullSpec::dose_response(0.0, adj), Statistic::difference_in_means, m,
                              c.continuity_correction);
    });
    r.diagnostics.notes.insert(r.diagnostics.notes.end(), notes.begin(), notes.end());
    row.report = std::move(r);
  } catch (const Error& e) {
    if (is_validation_error(e.code())) throw;
    row.error_code = std::string(to_string(e.code()));
    row.error = e.what();
    o.computational_failure = true;
  }
  o.report["clusters"] = data.size();
  o.report["estimates"] = rows_json({row});
  o.csv = estimate_csv({row});
  o.table = estimate_table({row}, true);
  return o;
}

SimScenario resolve_scenario(const RunConfig& c) {
  SimScenario s;
  if (c.input_path.empty()) {
    s = c.command == Command::simulate_sw ? default_sw_scenario() : default_parallel_scenario();
  } else {
    s = load_scenario(fs::path(c.input_path));
  }
  const bool want_sw = c.command == Command::simulate_sw;
  require((s.design == SimScenario::Design::stepped_wedge) == want_sw, ErrorCode::InvalidConfig,
          "scenario '" + s.id + "' is a " + std::string(to_string(s.design)) + " design; use " +
              (s.design == SimScenario::Design::stepped_wedge ? "simulate-sw" : "simulate or sweep"));
  if (c.seed) s.seed = *c.seed;
  if (c.replicates) s.replicates = *c.replicates;
  if (c.lambda) s.lambda = *c.lambda;
  if (c.alpha) s.alpha = *c.alpha;
  if (!c.estimators.empty()) s.estimators = c.estimators;
  if (c.sigma_convention) s.sigma_convention = parse_convention(*c.sigma_convention);
  s.validate();
  return s;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << "scenario_id,estimator,truth,bias,se,ase,por,cp,por_permutation,mc_se_bias,n_effective,n_failed\n";
  for (const auto& r : rows) {
    os << csv_field(r.scenario_id) << ',' << csv_field(r.estimator) << ',' << format_number(r.truth) << ','
       << format_number(r.bias) << ',' << format_number(r.se) << ',' << format_number(r.ase) << ','
       << format_number(r.por) << ',' << format_number(r.cp) << ','
       << (r.por_permutation ? format_number(*r.por_permutation) : "") << ',' << format_number(r.mc_se_bias) << ','
       << r.n_effective << ',' << r.n_failed << '\n';
  }
  return os.str();
}

std::string metrics_table(const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(20) << "estimator" << std::right << std::setw(10) << "truth" << std::setw(10) << "bias"
     << std::setw(10) << "se" << std::setw(10) << "ase" << std::setw(8) << "por" << std::setw(8) << "cp"
     << std::setw(10) << "por_perm" << std::setw(8) << "n" << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(20) << r.estimator << std::right << std::setw(10) << fmt(r.truth, 4)
       << std::setw(10) << fmt(r.bias, 3) << std::setw(10) << fmt(r.se, 3) << std::setw(10) << fmt(r.ase, 3)
       << std::setw(8) << fmt(r.por, 3) << std::setw(8) << fmt(r.cp, 3) << std::setw(10)
       << fmt(r.por_permutation, 3) << std::setw(8) << r.n_effective << '\n';
  }
  return os.str();
}

std::string raw_csv(const std::vector<ReplicateEstimate>& raw, std::uint64_t config = 0, bool with_config = false) {
  std::ostringstream os;
  if (!with_config || config == 0) {
    os << (with_config ? "config," : "") << "replicate,estimator,ok,estimate,se,reject,covered,reject_permutation,error\n";
  }
  for (const auto& r : raw) {
    if (with_config) os << config << ',';
    os << r.replicate << ',' << csv_field(r.estimator) << ',' << (r.ok ? 1 : 0) << ','
       << (r.ok ? format_number(r.estimate) : "") << ',' << (r.se ? format_number(*r.se) : "") << ','
       << (r.ok ? (r.reject ? "1" : "0") : "") << ',' << (r.ok ? (r.covered ? "1" : "0") : "") << ','
       << (r.reject_permutation ? (*r.reject_permutation ? "1" : "0") : "") << ',' << csv_field(r.error) << '\n';
  }
  return os.str();
}

json raw_json(const std::vector<ReplicateEstimate>& raw) {
  json out = json::array();
  for (const auto& r : raw) out.push_back(to_json(r));
  return out;
}

Outcome run_simulate(const RunConfig& c) {
  const auto s = resolve_scenario(c);
  EvaluateOptions opts;
  opts.threads = c.threads;
  opts.keep_raw = c.raw;
  const auto result = evaluate(s, opts);
  Outcome o;
  o.report = envelope(c, s.seed, s.alpha);
  o.report["scenario"] = json::parse(scenario_to_json(s));
  json rows = json::array();
  for (const auto& r : result.rows) rows.push_back(to_json(r));
  o.report["metrics"] = rows;
  o.report["degenerate_replicates"] = result.degenerate_replicates;
  o.report["notes"] = result.notes;
  if (c.raw) {
    o.report["raw"] = raw_json(result.raw);
    o.raw_csv = raw_csv(result.raw);
  }
  o.csv = metrics_csv(result.rows);
  o.table = "scenario " + s.id + " (" + std::to_string(s.replicates) + " replicates, seed " +
            std::to_string(s.seed) + ")\n" + metrics_table(result.rows);
  return o;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Outcome run_sweep(const RunConfig& c) {
  const auto s = resolve_scenario(c);
  require(c.configs >= 1, ErrorCode::InvalidConfig, "configs must be at least 1");
  EvaluateOptions opts;
  opts.threads = c.threads;
  opts.keep_raw = c.raw;
  const auto result = replicate_ascertainment_sweep(s, c.configs, opts);

  Outcome o;
  o.report = envelope(c, s.seed, s.alpha);
  o.report["scenario"] = json::parse(scenario_to_json(s));
  json summaries = json::array();
  std::ostringstream csv;
  csv << "scenario_id,estimator,config,abs_bias,cp\n";
  std::ostringstream table;
  table << "scenario " << s.id << " (" << c.configs << " ascertainment configurations x " << s.replicates
        << " replicates, seed " << s.seed << ")\n";
  table << std::left << std::setw(20) << "estimator" << std::right << std::setw(14) << "|bias| median"
        << std::setw(12) << "|bias| max" << std::setw(12) << "cp median" << std::setw(10) << "cp min" << std::setw(14)
        << "cp<0.93 frac" << '\n';
  for (const auto& e : result.estimators) {
    const auto below = std::count_if(e.cp.begin(), e.cp.end(), [](double v) { return v < 0.93; });
    const double frac = e.cp.empty() ? 0.0 : static_cast<double>(below) / static_cast<double>(e.cp.size());
    json j;
    j["estimator"] = e.estimator;
    j["abs_bias"] = e.abs_bias;
    j["cp"] = e.cp;
    j["abs_bias_median"] = number_json(quantile(e.abs_bias, 0.5));
    j["cp_median"] = number_json(quantile(e.cp, 0.5));
    j["cp_below_0_93"] = frac;
    summaries.push_back(j);
    for (std::size_t k = 0; k < e.cp.size(); ++k) {
      csv << csv_field(s.id) << ',' << csv_field(e.estimator) << ',' << k << ',' << format_number(e.abs_bias[k]) << ','
          << format_number(e.cp[k]) << '\n';
    }
    table << std::left << std::setw(20) << e.estimator << std::right << std::setw(14)
          << fmt(quantile(e.abs_bias, 0.5), 3) << std::setw(12)
          << fmt(*std::max_element(e.abs_bias.begin(), e.abs_bias.end()), 3) << std::setw(12)
          << fmt(quantile(e.cp, 0.5), 3) << std::setw(10) << fmt(*std::min_element(e.cp.begin(), e.cp.end()), 3)
          << std::setw(14) << fmt(frac, 3) << '\n';
  }
  o.report["estimators"] = summaries;
  json configs = json::array();
  for (std::size_t k = 0; k < result.configs.size(); ++k) {
    json rows = json::array();
    for (const auto& r : result.configs[k].rows) rows.push_back(to_json(r));
    configs.push_back({{"config", k}, {"metrics", rows}, {"degenerate_replicates", result.configs[k].degenerate_replicates}});
    if (c.raw) o.raw_csv += raw_csv(result.configs[k].raw, k, true);
  }
  o.report["configs"] = configs;
  o.csv = csv.str();
  o.table = table.str();
  return o;
}

void write_error(std::ostream& err, const std::string& code, const std::string& message, int exit_code) {
  json j;
  j["error"] = {{"code", code}, {"message", message}, {"exit_code", exit_code}};
  err << j.dump() << '\n';
}

}  // namespace

std::string_view to_string(Command c) noexcept {
  switch (c) {
    case Command::analyze: return "analyze";
    case Command::analyze_sw: return "analyze-sw";
    case Command::dose_response: return "dose-response";
    case Command::simulate: return "simulate";
    case Command::simulate_sw: return "simulate-sw";
    case Command::sweep: return "sweep";
  }
  return "?";
}

std::string_view to_string(CiChoice c) noexcept {
  switch (c) {
    case CiChoice::normal: return "normal";
    case CiChoice::invert_permutation: return "invert-permutation";
    case CiChoice::invert_normal: return "invert-normal";
  }
  return "?";
}

std::string_view to_string(ModeChoice c) noexcept { return c == ModeChoice::exact ? "exact" : "monte-carlo"; }

std::string_view to_string(WeightsChoice c) noexcept {
  switch (c) {
    case WeightsChoice::equal: return "equal";
    case WeightsChoice::optimal: return "optimal";
    case WeightsChoice::file: return "file";
  }
  return "?";
}

std::string version() { return CRTND_VERSION; }

void validate(const RunConfig& c) {
  auto check = [](bool ok, const std::string& msg) { require(ok, ErrorCode::InvalidConfig, msg); };
  if (c.alpha) check(*c.alpha > 0.0 && *c.alpha < 0.5, "alpha must lie in (0, 0.5)");
  check(c.draws >= 1, "draws must be at least 1");
  check(c.enumeration_cap >= 1, "enumeration cap must be at least 1");
  check(c.threads >= 0, "threads must be nonnegative");
  if (c.sigma_convention) parse_convention(*c.sigma_convention);
  if (c.replicates) check(*c.replicates >= 1, "replicates must be at least 1");
  if (c.lambda) check(*c.lambda > 0.0 && std::isfinite(*c.lambda), "lambda must be positive");
  if (c.command == Command::sweep) check(c.configs >= 1, "configs must be at least 1");

  if (is_simulation(c.command)) {
    if (!c.input_path.empty()) check(fs::is_regular_file(c.input_path), "scenario file '" + c.input_path + "' not found");
  } else {
    check(!c.input_path.empty(), std::string(to_string(c.command)) + " needs --input-path");
    check(fs::is_regular_file(c.input_path), "dataset '" + c.input_path + "' not found");
  }
  if (c.command == Command::analyze) {
    const auto known = analyze_default_estimators();
    for (const auto& e : c.estimators) {
      check(std::find(known.begin(), known.end(), e) != known.end(),
            "unknown estimator '" + e + "' for analyze (choose from odds_ratio, tpf, log_contrast, covariate_adjusted)");
    }
  } else if (!is_simulation(c.command)) {
    check(c.estimators.empty(), "--estimators applies to analyze and the simulation commands");
  }
  if (c.command == Command::analyze_sw) {
    if (c.weights == WeightsChoice::file) {
      check(!c.weights_file.empty(), "--weights file needs --weights-file");
      check(fs::is_regular_file(c.weights_file), "weights file '" + c.weights_file + "' not found");
    }
  } else {
    check(c.weights == WeightsChoice::equal && c.weights_file.empty(), "--weights applies to analyze-sw only");
  }
  check(!c.adjust_covariates || c.command == Command::dose_response, "--adjust-covariates applies to dose-response only");
  if (!c.output_path.empty()) {
    const fs::path out(c.output_path);
    check(out.extension() != ".csv", "--output-path names the JSON report; the CSV table is written next to it");
    const auto parent = out.parent_path();
    check(parent.empty() || fs::is_directory(parent), "output directory '" + parent.string() + "' does not exist");
  }
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    validate(config);
    Outcome o;
    switch (config.command) {
      case Command::analyze: o = run_analyze(config); break;
      case Command::analyze_sw: o = run_analyze_sw(config); break;
      case Command::dose_response: o = run_dose_response(config); break;
      case Command::simulate:
      case Command::simulate_sw: o = run_simulate(config); break;
      case Command::sweep: o = run_sweep(config); break;
    }
    if (!config.output_path.empty()) {
      write_file(config.output_path, o.report.dump(2) + "\n");
      write_file(csv_sibling(config.output_path), o.csv);
      if (!o.raw_csv.empty()) write_file(csv_sibling(config.output_path, "_raw"), o.raw_csv);
    }
    out << o.table;
    if (o.computational_failure) {
      for (const auto& e : o.report.value("estimates", json::array())) {
        if (e.contains("error")) {
          write_error(err, e["error"]["code"].get<std::string>(), e["error"]["message"].get<std::string>(), 3);
        }
      }
      return 3;
    }
    return 0;
  } catch (const Error& e) {
    const int code = is_validation_error(e.code()) ? 2 : 3;
    write_error(err, std::string(to_string(e.code())), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    write_error(err, "InternalError", e.what(), 3);
    return 3;
  }
}

}  // namespace crtnd::io
