#include "crtnd/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "crtnd/error.hpp"

namespace crtnd {

double log_contrast(double y_count, double z_count, bool continuity_correction,
                    const std::string& cluster_id) {
  if (continuity_correction) {
    require(y_count >= 0.0 && z_count >= 0.0, ErrorCode::InvalidArgument,
            "negative count in cluster '" + cluster_id + "'");
    return std::log(y_count + 0.5) - std::log(z_count + 0.5);
  }
  require(y_count > 0.0 && z_count > 0.0, ErrorCode::ZeroCount,
          "cluster '" + cluster_id + "' has a zero count (y=" + std::to_string(y_count) +
              ", z=" + std::to_string(z_count) + ")");
  return std::log(y_count) - std::log(z_count);
}

double log_contrast(const ClusterRecord& record, bool continuity_correction) {
  return log_contrast(record.y_count, record.z_count, continuity_correction, record.cluster_id);
}

void validate(std::span<const ClusterRecord> data) {
  std::set<std::string> seen;
  const std::size_t p = data.empty() ? 0 : data.front().covariates.size();
  const bool has_dose = !data.empty() && data.front().dose.has_value();
  for (const auto& r : data) {
    require(seen.insert(r.cluster_id).second, ErrorCode::InvalidArgument,
            "duplicate cluster_id '" + r.cluster_id + "'");
    require(r.arm == 0 || r.arm == 1, ErrorCode::InvalidArgument,
            "cluster '" + r.cluster_id + "' has arm " + std::to_string(r.arm) + " (expected 0 or 1)");
    require(r.y_count >= 0.0 && r.z_count >= 0.0 && std::isfinite(r.y_count) && std::isfinite(r.z_count),
            ErrorCode::InvalidArgument, "cluster '" + r.cluster_id + "' has a negative or non-finite count");
    require(r.covariates.size() == p, ErrorCode::DimensionMismatch,
            "cluster '" + r.cluster_id + "' has " + std::to_string(r.covariates.size()) +
                " covariates, expected " + std::to_string(p));
    require(r.dose.has_value() == has_dose, ErrorCode::DimensionMismatch,
            "dose present for some clusters but not cluster '" + r.cluster_id + "'");
    if (r.dose) {
      require(*r.dose >= 0.0 && *r.dose <= 1.0, ErrorCode::InvalidArgument,
              "cluster '" + r.cluster_id + "' has dose outside [0, 1]");
    }
  }
}

std::vector<double> log_contrasts(std::span<const ClusterRecord> data, bool continuity_correction) {
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& r : data) out.push_back(log_contrast(r, continuity_correction));
  return out;
}

std::vector<int> arms_of(std::span<const ClusterRecord> data) {
  std::vector<int> out;
  out.reserve(data.size());
  for (const auto& r : data) out.push_back(r.arm);
  return out;
}

Eigen::MatrixXd covariates_of(std::span<const ClusterRecord> data) {
  const Eigen::Index p = data.empty() ? 0 : static_cast<Eigen::Index>(data.front().covariates.size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(data.size()), p);
  for (std::size_t i = 0; i < data.size(); ++i) {
    require(static_cast<Eigen::Index>(data[i].covariates.size()) == p, ErrorCode::DimensionMismatch,
            "ragged covariates at cluster '" + data[i].cluster_id + "'");
    for (Eigen::Index j = 0; j < p; ++j) x(static_cast<Eigen::Index>(i), j) = data[i].covariates[j];
  }
  return x;
}

std::vector<double> doses_of(std::span<const ClusterRecord> data) {
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& r : data) {
    require(r.dose.has_value(), ErrorCode::MissingDose, "cluster '" + r.cluster_id + "' has no dose");
    out.push_back(*r.dose);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Panel

Panel::Panel(std::vector<std::string> cluster_ids, std::vector<int> start_periods, Eigen::MatrixXd y,
             Eigen::MatrixXd z)
    : ids_(std::move(cluster_ids)), starts_(std::move(start_periods)), y_(std::move(y)), z_(std::move(z)) {
  const auto m = static_cast<Eigen::Index>(ids_.size());
  require(static_cast<Eigen::Index>(starts_.size()) == m && y_.rows() == m && z_.rows() == m &&
              y_.cols() == z_.cols(),
          ErrorCode::DimensionMismatch, "panel dimensions disagree");
  for (Eigen::Index i = 0; i < y_.rows(); ++i) {
    for (Eigen::Index t = 0; t < y_.cols(); ++t) {
      require(y_(i, t) >= 0.0 && z_(i, t) >= 0.0, ErrorCode::InvalidArgument,
              "negative count at cluster '" + ids_[i] + "', period " + std::to_string(t + 1));
    }
  }
  for (std::size_t i = 0; i < starts_.size(); ++i) {
    require(starts_[i] >= 1 && starts_[i] <= y_.cols(), ErrorCode::InvalidArgument,
            "cluster '" + ids_[i] + "' start period outside 1.." + std::to_string(y_.cols()));
  }
}

Panel Panel::from_records(std::span<const ClusterPeriodRecord> records) {
  require(!records.empty(), ErrorCode::IncompletePanel, "empty stepped-wedge panel");
  std::map<std::string, int> start;
  int periods = 0;
  for (const auto& r : records) {
    require(r.period >= 1, ErrorCode::InvalidArgument, "period must be >= 1 (cluster '" + r.cluster_id + "')");
    periods = std::max(periods, r.period);
    auto [it, inserted] = start.emplace(r.cluster_id, r.start_period);
    require(inserted || it->second == r.start_period, ErrorCode::ParseError,
            "cluster '" + r.cluster_id + "' has inconsistent start_period values");
  }
  std::vector<std::string> ids;
  std::vector<int> starts;
  std::map<std::string, int> row;
  for (const auto& [id, s] : start) {
    row[id] = static_cast<int>(ids.size());
    ids.push_back(id);
    starts.push_back(s);
  }
  const auto m = static_cast<Eigen::Index>(ids.size());
  Eigen::MatrixXd y = Eigen::MatrixXd::Constant(m, periods, -1.0);
  Eigen::MatrixXd z = Eigen::MatrixXd::Constant(m, periods, -1.0);
  Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(m, periods);
  for (const auto& r : records) {
    const int i = row.at(r.cluster_id);
    require(seen(i, r.period - 1) == 0, ErrorCode::ParseError,
            "duplicate cell (cluster '" + r.cluster_id + "', period " + std::to_string(r.period) + ")");
    seen(i, r.period - 1) = 1;
    y(i, r.period - 1) = r.y_count;
    z(i, r.period - 1) = r.z_count;
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    for (int t = 0; t < periods; ++t) {
      require(seen(i, t) == 1, ErrorCode::IncompletePanel,
              "missing cell (cluster '" + ids[i] + "', period " + std::to_string(t + 1) + ")");
    }
  }
  return Panel(std::move(ids), std::move(starts), std::move(y), std::move(z));
}

std::vector<ClusterPeriodRecord> Panel::to_records() const {
  std::vector<ClusterPeriodRecord> out;
  out.reserve(static_cast<std::size_t>(y_.size()));
  for (int i = 0; i < clusters(); ++i) {
    for (int t = 0; t < periods(); ++t) {
      out.push_back({ids_[i], t + 1, starts_[i], y_(i, t), z_(i, t)});
    }
  }
  return out;
}

Eigen::MatrixXd Panel::log_contrasts(bool continuity_correction) const {
  Eigen::MatrixXd l(y_.rows(), y_.cols());
  for (Eigen::Index i = 0; i < y_.rows(); ++i) {
    for (Eigen::Index t = 0; t < y_.cols(); ++t) {
      l(i, t) = log_contrast(y_(i, t), z_(i, t), continuity_correction,
                             ids_[i] + "@period" + std::to_string(t + 1));
    }
  }
  return l;
}

// ---------------------------------------------------------------------------
// Potential tables

double PotentialTable::control_log_contrast(int i) const { return std::log(oy0[i]) - std::log(oz0[i]); }

double PotentialTable::treated_log_contrast(int i) const { return std::log(oy1(i)) - std::log(oz1(i)); }

std::vector<double> PotentialTable::control_log_contrasts() const {
  std::vector<double> out(oy0.size());
  for (int i = 0; i < clusters(); ++i) out[i] = control_log_contrast(i);
  return out;
}

void PotentialTable::validate() const {
  const auto m = oy0.size();
  require(oz0.size() == m && c.size() == m, ErrorCode::DimensionMismatch, "potential table vectors differ in length");
  require(cluster_ids.empty() || cluster_ids.size() == m, ErrorCode::DimensionMismatch,
          "potential table ids differ in length");
  require(covariates.size() == 0 || covariates.rows() == static_cast<Eigen::Index>(m),
          ErrorCode::DimensionMismatch, "potential table covariates differ in rows");
  require(lambda > 0.0, ErrorCode::InvalidArgument, "relative risk must be positive");
  for (std::size_t i = 0; i < m; ++i) {
    require(oy0[i] > 0.0 && oz0[i] > 0.0 && c[i] > 0.0, ErrorCode::InvalidArgument,
            "potential counts and relative ascertainment must be positive");
  }
}

Eigen::MatrixXd SWPotentialTable::control_log_contrasts() const {
  return oy0.array().log() - oz0.array().log();
}

void SWPotentialTable::validate() const {
  require(oz0.rows() == oy0.rows() && oz0.cols() == oy0.cols() && c.rows() == oy0.rows() &&
              c.cols() == oy0.cols(),
          ErrorCode::DimensionMismatch, "stepped-wedge potential table dimensions differ");
  require(cluster_ids.empty() || static_cast<Eigen::Index>(cluster_ids.size()) == oy0.rows(),
          ErrorCode::DimensionMismatch, "stepped-wedge potential table ids differ in length");
  require(lambda > 0.0, ErrorCode::InvalidArgument, "relative risk must be positive");
  require((oy0.array() > 0.0).all() && (oz0.array() > 0.0).all() && (c.array() > 0.0).all(),
          ErrorCode::InvalidArgument, "potential counts and relative ascertainment must be positive");
}

namespace {

std::string default_id(int i) {
  std::string s = std::to_string(i + 1);
  return "c" + std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

}  // namespace

ClusterData realize(const PotentialTable& table, std::span<const int> assignment) {
  const int m = table.clusters();
  require(static_cast<int>(assignment.size()) == m, ErrorCode::DimensionMismatch,
          "assignment has " + std::to_string(assignment.size()) + " entries for " + std::to_string(m) +
              " clusters");
  ClusterData out(m);
  for (int i = 0; i < m; ++i) {
    const int a = assignment[i];
    require(a == 0 || a == 1, ErrorCode::InvalidArgument, "parallel assignment entries must be 0 or 1");
    auto& r = out[i];
    r.cluster_id = table.cluster_ids.empty() ? default_id(i) : table.cluster_ids[i];
    r.arm = a;
    r.y_count = a == 1 ? table.oy1(i) : table.oy0[i];
    r.z_count = a == 1 ? table.oz1(i) : table.oz0[i];
    if (table.covariates.cols() > 0) {
      r.covariates.resize(static_cast<std::size_t>(table.covariates.cols()));
      for (Eigen::Index j = 0; j < table.covariates.cols(); ++j) r.covariates[j] = table.covariates(i, j);
    }
  }
  return out;
}

Panel realize(const SWPotentialTable& table, std::span<const int> start_periods) {
  const int m = table.clusters();
  const int periods = table.periods();
  require(static_cast<int>(start_periods.size()) == m, ErrorCode::DimensionMismatch,
          "assignment has " + std::to_string(start_periods.size()) + " entries for " + std::to_string(m) +
              " clusters");
  Eigen::MatrixXd y(m, periods);
  Eigen::MatrixXd z(m, periods);
  for (int i = 0; i < m; ++i) {
    for (int t = 1; t <= periods; ++t) {
      const bool treated = treated_at(start_periods[i], t);
      const double c = treated ? table.c(i, t - 1) : 1.0;
      y(i, t - 1) = (treated ? table.lambda * c : 1.0) * table.oy0(i, t - 1);
      z(i, t - 1) = c * table.oz0(i, t - 1);
    }
  }
  std::vector<std::string> ids = table.cluster_ids;
  if (ids.empty()) {
    for (int i = 0; i < m; ++i) ids.push_back(default_id(i));
  }
  return Panel(std::move(ids), std::vector<int>(start_periods.begin(), start_periods.end()), std::move(y),
               std::move(z));
}

}  // namespace crtnd
