#include <cmath>

#include "json_convert.hpp"

namespace crtnd::io {

using nlohmann::json;

json number_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? number_json(*v) : json(nullptr); }

json vector_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number_json(x));
  return out;
}

}  // namespace

json to_json(const EstimateReport& r) {
  json j;
  j["method"] = std::string(to_string(r.method));
  j["estimate"] = number_json(r.natural_estimate());
  j["log_estimate"] = number_json(r.log_estimate);
  j["se_log"] = optional_number(r.se_log);
  if (r.ci) {
    j["ci_low"] = number_json(r.ci->low);
    j["ci_high"] = number_json(r.ci->high);
  } else {
    j["ci_low"] = nullptr;
    j["ci_high"] = nullptr;
  }
  j["ci_method"] = std::string(to_string(r.ci_method));
  j["alpha"] = r.alpha;
  j["p_value"] = optional_number(r.p_value);
  json values = json::object();
  for (const auto& [k, v] : r.diagnostics.values) values[k] = number_json(v);
  json vectors = json::object();
  for (const auto& [k, v] : r.diagnostics.vectors) vectors[k] = vector_json(v);
  j["diagnostics"] = {{"values", values}, {"vectors", vectors}, {"notes", r.diagnostics.notes}};
  return j;
}

json to_json(const PermutationResult& r) {
  json j;
  j["observed_stat"] = number_json(r.observed_stat);
  j["null_draws"] = r.null_draws;
  j["p_two_sided"] = number_json(r.p_two_sided);
  j["p_left"] = number_json(r.p_left);
  j["p_right"] = number_json(r.p_right);
  j["mode"] = r.mode.kind == PermutationMode::Kind::exact ? "exact" : "monte_carlo";
  if (r.mode.kind == PermutationMode::Kind::monte_carlo) {
    j["draws"] = r.mode.draws;
    j["seed"] = r.mode.seed;
    j["stream"] = r.mode.stream;
  }
  j["fast_path"] = r.fast_path;
  j["null_mean"] = number_json(r.null_mean);
  j["null_sd"] = number_json(r.null_sd);
  return j;
}

json to_json(const MetricsRow& r) {
  json j;
  j["scenario_id"] = r.scenario_id;
  j["estimator"] = r.estimator;
  j["truth"] = number_json(r.truth);
  j["bias"] = number_json(r.bias);
  j["se"] = number_json(r.se);
  j["ase"] = number_json(r.ase);
  j["por"] = number_json(r.por);
  j["cp"] = number_json(r.cp);
  j["por_permutation"] = optional_number(r.por_permutation);
  j["mc_se_bias"] = number_json(r.mc_se_bias);
  j["n_effective"] = r.n_effective;
  j["n_failed"] = r.n_failed;
  return j;
}

json to_json(const ReplicateEstimate& r) {
  json j;
  j["replicate"] = r.replicate;
  j["estimator"] = r.estimator;
  j["ok"] = r.ok;
  if (r.ok) {
    j["estimate"] = number_json(r.estimate);
    j["se"] = optional_number(r.se);
    j["reject"] = r.reject;
    j["covered"] = r.covered;
    j["reject_permutation"] = r.reject_permutation ? json(*r.reject_permutation) : json(nullptr);
  } else {
    j["error"] = r.error;
  }
  return j;
}

json to_json(const SWWeights& w) {
  json j;
  j["kind"] = std::string(to_string(w.kind));
  j["w"] = vector_json(std::vector<double>(w.w.data(), w.w.data() + w.w.size()));
  j["notes"] = w.notes;
  return j;
}

}  // namespace crtnd::io
