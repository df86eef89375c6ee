#include "crtnd/io/scenario_json.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "crtnd/error.hpp"

namespace crtnd::io {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  require(obj.is_object(), ErrorCode::InvalidConfig, where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    require(allowed.count(key) > 0, ErrorCode::InvalidConfig, where + ": unknown key '" + key + "'");
  }
}

template <class T>
T get_as(const json& obj, const std::string& key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, where + ": key '" + key + "' has the wrong type (" + e.what() + ")");
  }
}

template <class T>
void read_into(const json& obj, const std::string& key, T& target, const std::string& where) {
  if (obj.contains(key)) target = get_as<T>(obj, key, where);
}

SimScenario base_scenario(const std::string& name, const std::string& where) {
  if (name == "parallel_default") return default_parallel_scenario();
  if (name == "stepped_wedge_default") return default_sw_scenario();
  if (name == "dose_response_default") return default_dose_response_scenario();
  fail(ErrorCode::InvalidConfig, where + ": unknown base scenario '" + name + "'");
}

AscertainmentLaw::DrawPolicy parse_policy(const std::string& s, const std::string& where) {
  if (s == "once_per_study") return AscertainmentLaw::DrawPolicy::once_per_study;
  if (s == "per_replicate") return AscertainmentLaw::DrawPolicy::per_replicate;
  fail(ErrorCode::InvalidConfig, where + ": draw_policy must be once_per_study or per_replicate");
}

std::string_view policy_name(AscertainmentLaw::DrawPolicy p) {
  return p == AscertainmentLaw::DrawPolicy::once_per_study ? "once_per_study" : "per_replicate";
}

}  // namespace

SimScenario parse_scenario(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, source + ": " + e.what());
  }
  check_keys(doc,
             {"base", "id", "design", "baseline_y", "baseline_z", "covariate", "baseline_y_periods", "treated",
              "starts_per_period", "lambda", "ascertainment", "covariate_coupling", "replicates", "seed", "alpha",
              "estimators", "permutation_draws", "sigma_convention", "dose"},
             source);

  SimScenario s;
  if (doc.contains("base")) s = base_scenario(get_as<std::string>(doc, "base", source), source);
  read_into(doc, "id", s.id, source);
  if (doc.contains("design")) {
    const auto d = get_as<std::string>(doc, "design", source);
    require(d == "parallel" || d == "stepped_wedge", ErrorCode::InvalidConfig,
            source + ": design must be parallel or stepped_wedge");
    s.design = d == "parallel" ? SimScenario::Design::parallel : SimScenario::Design::stepped_wedge;
  }
  read_into(doc, "baseline_y", s.baseline_y, source);
  read_into(doc, "baseline_z", s.baseline_z, source);
  read_into(doc, "covariate", s.covariate, source);
  if (doc.contains("baseline_y_periods")) {
    const auto rows = get_as<std::vector<std::vector<double>>>(doc, "baseline_y_periods", source);
    const std::size_t t = rows.empty() ? 0 : rows.front().size();
    s.baseline_y_periods.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      require(rows[i].size() == t, ErrorCode::InvalidConfig, source + ": baseline_y_periods rows differ in length");
      for (std::size_t j = 0; j < t; ++j) {
        s.baseline_y_periods(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      }
    }
  }
  read_into(doc, "treated", s.treated, source);
  read_into(doc, "starts_per_period", s.starts_per_period, source);
  read_into(doc, "lambda", s.lambda, source);
  read_into(doc, "covariate_coupling", s.covariate_coupling, source);
  read_into(doc, "replicates", s.replicates, source);
  read_into(doc, "seed", s.seed, source);
  read_into(doc, "alpha", s.alpha, source);
  read_into(doc, "estimators", s.estimators, source);
  read_into(doc, "permutation_draws", s.permutation_draws, source);
  if (doc.contains("sigma_convention")) {
    const auto c = get_as<std::string>(doc, "sigma_convention", source);
    require(c == "canonical" || c == "printed", ErrorCode::InvalidConfig,
            source + ": sigma_convention must be canonical or printed");
    s.sigma_convention = c == "canonical" ? SigmaConvention::canonical : SigmaConvention::printed;
  }
  if (doc.contains("ascertainment")) {
    const auto& a = doc["ascertainment"];
    const std::string where = source + ": ascertainment";
    check_keys(a, {"beta_shape_a", "beta_shape_b", "draw_policy", "couple_to_ratio", "fixed"}, where);
    read_into(a, "beta_shape_a", s.ascertainment.beta_shape_a, where);
    read_into(a, "beta_shape_b", s.ascertainment.beta_shape_b, where);
    read_into(a, "couple_to_ratio", s.ascertainment.couple_to_ratio, where);
    if (a.contains("draw_policy")) s.ascertainment.draw_policy = parse_policy(get_as<std::string>(a, "draw_policy", where), where);
    if (a.contains("fixed")) {
      if (a["fixed"].is_null()) {
        s.ascertainment.fixed.reset();
      } else {
        s.ascertainment.fixed = get_as<std::vector<double>>(a, "fixed", where);
      }
    }
  }
  if (doc.contains("dose")) {
    const auto& d = doc["dose"];
    if (d.is_null()) {
      s.dose.reset();
    } else {
      const std::string where = source + ": dose";
      check_keys(d, {"beta", "treated_low", "treated_high", "control_low", "control_high"}, where);
      DoseDesign dd = s.dose.value_or(DoseDesign{});
      read_into(d, "beta", dd.beta, where);
      read_into(d, "treated_low", dd.treated_low, where);
      read_into(d, "treated_high", dd.treated_high, where);
      read_into(d, "control_low", dd.control_low, where);
      read_into(d, "control_high", dd.control_high, where);
      s.dose = dd;
    }
  }
  s.validate();
  return s;
}

SimScenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::InvalidConfig, "cannot open scenario '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

std::string scenario_to_json(const SimScenario& s) {
  json doc;
  doc["id"] = s.id;
  doc["design"] = std::string(to_string(s.design));
  if (s.design == SimScenario::Design::parallel) {
    doc["baseline_y"] = s.baseline_y;
    doc["covariate"] = s.covariate;
    doc["treated"] = s.treated;
  } else {
    json rows = json::array();
    for (Eigen::Index i = 0; i < s.baseline_y_periods.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(s.baseline_y_periods.cols()));
      for (Eigen::Index j = 0; j < s.baseline_y_periods.cols(); ++j) {
        row[static_cast<std::size_t>(j)] = s.baseline_y_periods(i, j);
      }
      rows.push_back(row);
    }
    doc["baseline_y_periods"] = rows;
    doc["starts_per_period"] = s.starts_per_period;
    doc["sigma_convention"] = std::string(to_string(s.sigma_convention));
  }
  doc["baseline_z"] = s.baseline_z;
  doc["lambda"] = s.lambda;
  json a;
  a["beta_shape_a"] = s.ascertainment.beta_shape_a;
  a["beta_shape_b"] = s.ascertainment.beta_shape_b;
  a["draw_policy"] = std::string(policy_name(s.ascertainment.draw_policy));
  a["couple_to_ratio"] = s.ascertainment.couple_to_ratio;
  a["fixed"] = s.ascertainment.fixed ? json(*s.ascertainment.fixed) : json(nullptr);
  doc["ascertainment"] = a;
  doc["covariate_coupling"] = s.covariate_coupling;
  doc["replicates"] = s.replicates;
  doc["seed"] = s.seed;
  doc["alpha"] = s.alpha;
  doc["estimators"] = s.estimators;
  doc["permutation_draws"] = s.permutation_draws;
  if (s.dose) {
    doc["dose"] = {{"beta", s.dose->beta},
                   {"treated_low", s.dose->treated_low},
                   {"treated_high", s.dose->treated_high},
                   {"control_low", s.dose->control_low},
                   {"control_high", s.dose->control_high}};
  } else {
    doc["dose"] = nullptr;
  }
  return doc.dump(2);
}

}  // namespace crtnd::io
