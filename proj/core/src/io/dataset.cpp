#include "crtnd/io/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "crtnd/error.hpp"
#include "crtnd/io/csv.hpp"

namespace crtnd::io {

namespace {

std::string where(const std::string& source, int line, const std::string& column = {}) {
  std::string s = source + ":" + std::to_string(line);
  if (!column.empty()) s += " (column " + column + ")";
  return s;
}

std::map<std::string, std::size_t> index_columns(const CsvTable& t, const std::string& source) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t k = 0; k < t.header.size(); ++k) {
    require(idx.emplace(t.header[k], k).second, ErrorCode::SchemaError,
            source + ": duplicate column '" + t.header[k] + "'");
  }
  return idx;
}

void check_width(const CsvTable& t, std::size_t r, const std::string& source) {
  require(t.rows[r].size() == t.header.size(), ErrorCode::ParseError,
          where(source, t.line_numbers[r]) + ": expected " + std::to_string(t.header.size()) + " fields, found " +
              std::to_string(t.rows[r].size()));
}

double number_at(const CsvTable& t, std::size_t r, std::size_t col, const std::string& source) {
  double v = 0.0;
  require(parse_number(t.rows[r][col], v), ErrorCode::ParseError,
          where(source, t.line_numbers[r], t.header[col]) + ": '" + t.rows[r][col] + "' is not a finite number");
  return v;
}

int integer_at(const CsvTable& t, std::size_t r, std::size_t col, const std::string& source) {
  long long v = 0;
  require(parse_integer(t.rows[r][col], v), ErrorCode::ParseError,
          where(source, t.line_numbers[r], t.header[col]) + ": '" + t.rows[r][col] + "' is not an integer");
  return static_cast<int>(v);
}

double count_at(const CsvTable& t, std::size_t r, std::size_t col, const std::string& source) {
  const double v = number_at(t, r, col, source);
  require(v >= 0.0, ErrorCode::ParseError, where(source, t.line_numbers[r], t.header[col]) + ": negative count");
  return v;
}

bool is_covariate_column(const std::string& name, int& k) {
  if (name.size() < 2 || name[0] != 'x') return false;
  long long v = 0;
  if (!parse_integer(name.substr(1), v) || v < 1 || name[1] == '0') return false;
  k = static_cast<int>(v);
  return true;
}

ClusterData parse_parallel_table(const CsvTable& t, const std::string& source) {
  const auto idx = index_columns(t, source);
  std::vector<std::string> missing;
  for (const char* c : {"cluster_id", "arm", "y_count", "z_count"}) {
    if (!idx.count(c)) missing.emplace_back(c);
  }
  std::map<int, std::size_t> covariates;
  std::vector<std::string> unknown;
  for (const auto& [name, k] : idx) {
    int j = 0;
    if (name == "cluster_id" || name == "arm" || name == "y_count" || name == "z_count" || name == "dose") continue;
    if (is_covariate_column(name, j)) {
      covariates[j] = k;
    } else {
      unknown.push_back(name);
    }
  }
  if (!missing.empty() || !unknown.empty()) {
    std::string msg = source + ": parallel schema is cluster_id, arm, y_count, z_count, [x1..xp], [dose]";
    for (const auto& m : missing) msg += "; missing column '" + m + "'";
    for (const auto& u : unknown) msg += "; unknown column '" + u + "'";
    fail(ErrorCode::SchemaError, msg);
  }
  for (int j = 1; j <= static_cast<int>(covariates.size()); ++j) {
    require(covariates.count(j), ErrorCode::SchemaError,
            source + ": covariate columns must be x1..xp without gaps (x" + std::to_string(j) + " missing)");
  }
  const auto dose_col = idx.find("dose");

  ClusterData data;
  std::map<std::string, int> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    check_width(t, r, source);
    const auto& row = t.rows[r];
    ClusterRecord rec;
    rec.cluster_id = row[idx.at("cluster_id")];
    require(!rec.cluster_id.empty(), ErrorCode::ParseError, where(source, t.line_numbers[r], "cluster_id") + ": empty id");
    const auto [it, fresh] = seen.emplace(rec.cluster_id, t.line_numbers[r]);
    require(fresh, ErrorCode::ParseError,
            where(source, t.line_numbers[r], "cluster_id") + ": duplicate cluster_id '" + rec.cluster_id +
                "' (first seen on line " + std::to_string(it->second) + ")");
    rec.arm = integer_at(t, r, idx.at("arm"), source);
    require(rec.arm == 0 || rec.arm == 1, ErrorCode::ParseError,
            where(source, t.line_numbers[r], "arm") + ": arm must be 0 or 1");
    rec.y_count = count_at(t, r, idx.at("y_count"), source);
    rec.z_count = count_at(t, r, idx.at("z_count"), source);
    for (const auto& [j, col] : covariates) rec.covariates.push_back(number_at(t, r, col, source));
    if (dose_col != idx.end() && !row[dose_col->second].empty()) {
      const double d = number_at(t, r, dose_col->second, source);
      require(d >= 0.0 && d <= 1.0, ErrorCode::ParseError,
              where(source, t.line_numbers[r], "dose") + ": dose must lie in [0, 1]");
      rec.dose = d;
    }
    data.push_back(std::move(rec));
  }
  std::sort(data.begin(), data.end(), [](const auto& a, const auto& b) { return a.cluster_id < b.cluster_id; });
  validate(data);
  return data;
}

Panel parse_sw_table(const CsvTable& t, const std::string& source) {
  const auto idx = index_columns(t, source);
  const std::set<std::string> expected = {"cluster_id", "period", "start_period", "y_count", "z_count"};
  std::string msg;
  for (const auto& e : expected) {
    if (!idx.count(e)) msg += "; missing column '" + e + "'";
  }
  for (const auto& [name, k] : idx) {
    if (!expected.count(name)) msg += "; unknown column '" + name + "'";
  }
  require(msg.empty(), ErrorCode::SchemaError,
          source + ": stepped-wedge schema is cluster_id, period, start_period, y_count, z_count" + msg);

  std::vector<ClusterPeriodRecord> records;
  std::map<std::pair<std::string, int>, int> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    check_width(t, r, source);
    ClusterPeriodRecord rec;
    rec.cluster_id = t.rows[r][idx.at("cluster_id")];
    require(!rec.cluster_id.empty(), ErrorCode::ParseError, where(source, t.line_numbers[r], "cluster_id") + ": empty id");
    rec.period = integer_at(t, r, idx.at("period"), source);
    rec.start_period = integer_at(t, r, idx.at("start_period"), source);
    require(rec.period >= 1, ErrorCode::ParseError, where(source, t.line_numbers[r], "period") + ": period must be >= 1");
    require(rec.start_period >= 1, ErrorCode::ParseError,
            where(source, t.line_numbers[r], "start_period") + ": start_period must be >= 1");
    rec.y_count = count_at(t, r, idx.at("y_count"), source);
    rec.z_count = count_at(t, r, idx.at("z_count"), source);
    const auto [it, fresh] = seen.emplace(std::make_pair(rec.cluster_id, rec.period), t.line_numbers[r]);
    require(fresh, ErrorCode::ParseError,
            where(source, t.line_numbers[r]) + ": duplicate cell (cluster '" + rec.cluster_id + "', period " +
                std::to_string(rec.period) + "), first seen on line " + std::to_string(it->second));
    records.push_back(std::move(rec));
  }
  return Panel::from_records(records);
}

bool looks_stepped_wedge(const CsvTable& t) {
  return std::find(t.header.begin(), t.header.end(), "period") != t.header.end() ||
         std::find(t.header.begin(), t.header.end(), "start_period") != t.header.end();
}

}  // namespace

ClusterData parse_parallel(std::istream& in, const std::string& source) {
  return parse_parallel_table(read_csv(in, source), source);
}

Panel parse_stepped_wedge(std::istream& in, const std::string& source) {
  return parse_sw_table(read_csv(in, source), source);
}

Dataset parse_dataset(std::istream& in, const std::string& source) {
  const auto t = read_csv(in, source);
  if (looks_stepped_wedge(t)) return parse_sw_table(t, source);
  return parse_parallel_table(t, source);
}

Dataset parse_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::InvalidConfig, "cannot open dataset '" + path.string() + "'");
  return parse_dataset(in, path.string());
}

void write_parallel(std::ostream& out, std::span<const ClusterRecord> data) {
  const std::size_t p = data.empty() ? 0 : data.front().covariates.size();
  const bool has_dose = std::any_of(data.begin(), data.end(), [](const auto& r) { return r.dose.has_value(); });
  out << "cluster_id,arm,y_count,z_count";
  for (std::size_t j = 1; j <= p; ++j) out << ",x" << j;
  if (has_dose) out << ",dose";
  out << '\n';
  for (const auto& r : data) {
    out << csv_field(r.cluster_id) << ',' << r.arm << ',' << format_number(r.y_count) << ','
        << format_number(r.z_count);
    for (double x : r.covariates) out << ',' << format_number(x);
    if (has_dose) out << ',' << (r.dose ? format_number(*r.dose) : std::string());
    out << '\n';
  }
}

void write_stepped_wedge(std::ostream& out, const Panel& panel) {
  out << "cluster_id,period,start_period,y_count,z_count\n";
  for (const auto& r : panel.to_records()) {
    out << csv_field(r.cluster_id) << ',' << r.period << ',' << r.start_period << ',' << format_number(r.y_count) << ','
        << format_number(r.z_count) << '\n';
  }
}

}  // namespace crtnd::io
