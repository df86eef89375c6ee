#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace crtnd {

// One cluster of a parallel-arm trial. Counts are real-valued: simulated data
// sets rescale counts by covariates, so they need not be integers.
struct ClusterRecord {
  std::string cluster_id;
  int arm = 0;  // 1 = intervention, 0 = control
  double y_count = 0.0;  // test-positives among healthcare seekers
  double z_count = 0.0;  // test-negatives among healthcare seekers
  std::vector<double> covariates;
  std::optional<double> dose;  // cluster-level intervention received, in [0, 1]

  friend bool operator==(const ClusterRecord&, const ClusterRecord&) = default;
};

using ClusterData = std::vector<ClusterRecord>;

// One (cluster, period) cell of a stepped-wedge trial. A cluster is treated
// at period t iff t >= start_period.
struct ClusterPeriodRecord {
  std::string cluster_id;
  int period = 1;
  int start_period = 1;
  double y_count = 0.0;
  double z_count = 0.0;

  friend bool operator==(const ClusterPeriodRecord&, const ClusterPeriodRecord&) = default;
};

inline bool treated_at(int start_period, int period) noexcept { return period >= start_period; }

// Throws ZeroCount unless both counts are positive, or applies the +0.5
// continuity correction when asked.
double log_contrast(double y_count, double z_count, bool continuity_correction = false,
                    const std::string& cluster_id = {});
double log_contrast(const ClusterRecord& record, bool continuity_correction = false);

// Validates a parallel-arm data set: arms in {0,1}, nonnegative counts,
// unique ids, common covariate dimension, doses in [0,1].
void validate(std::span<const ClusterRecord> data);

std::vector<double> log_contrasts(std::span<const ClusterRecord> data, bool continuity_correction = false);
std::vector<int> arms_of(std::span<const ClusterRecord> data);
Eigen::MatrixXd covariates_of(std::span<const ClusterRecord> data);
// Throws MissingDose if any record lacks a dose.
std::vector<double> doses_of(std::span<const ClusterRecord> data);

// Complete m x T stepped-wedge panel in wide form. Clusters are held in
// cluster_id order.
class Panel {
 public:
  Panel() = default;
  Panel(std::vector<std::string> cluster_ids, std::vector<int> start_periods, Eigen::MatrixXd y,
        Eigen::MatrixXd z);

  // Throws IncompletePanel naming the first missing (cluster, period) cell,
  // ParseError on duplicates or inconsistent start periods.
  static Panel from_records(std::span<const ClusterPeriodRecord> records);
  std::vector<ClusterPeriodRecord> to_records() const;

  int clusters() const noexcept { return static_cast<int>(ids_.size()); }
  int periods() const noexcept { return static_cast<int>(y_.cols()); }
  const std::vector<std::string>& cluster_ids() const noexcept { return ids_; }
  const std::vector<int>& start_periods() const noexcept { return starts_; }
  const Eigen::MatrixXd& y() const noexcept { return y_; }
  const Eigen::MatrixXd& z() const noexcept { return z_; }

  // m x T matrix of L_{it}.
  Eigen::MatrixXd log_contrasts(bool continuity_correction = false) const;

  friend bool operator==(const Panel& a, const Panel& b) {
    return a.ids_ == b.ids_ && a.starts_ == b.starts_ && a.y_ == b.y_ && a.z_ == b.z_;
  }

 private:
  std::vector<std::string> ids_;
  std::vector<int> starts_;
  Eigen::MatrixXd y_;
  Eigen::MatrixXd z_;
};

// Counterfactual counts of a parallel-arm trial under the constant relative
// risk model: oy1 = lambda * c * oy0, oz1 = c * oz0.
struct PotentialTable {
  std::vector<std::string> cluster_ids;
  std::vector<double> oy0;
  std::vector<double> oz0;
  std::vector<double> c;  // relative ascertainment, > 0
  double lambda = 1.0;
  Eigen::MatrixXd covariates;  // m x p, p may be 0

  int clusters() const noexcept { return static_cast<int>(oy0.size()); }
  double oy1(int i) const { return lambda * c[i] * oy0[i]; }
  double oz1(int i) const { return c[i] * oz0[i]; }
  double control_log_contrast(int i) const;
  double treated_log_contrast(int i) const;
  std::vector<double> control_log_contrasts() const;

  void validate() const;
};

// Stepped-wedge analogue: every (cluster, period) cell has its own c_it.
struct SWPotentialTable {
  std::vector<std::string> cluster_ids;
  Eigen::MatrixXd oy0;  // m x T
  Eigen::MatrixXd oz0;
  Eigen::MatrixXd c;
  double lambda = 1.0;

  int clusters() const noexcept { return static_cast<int>(oy0.rows()); }
  int periods() const noexcept { return static_cast<int>(oy0.cols()); }
  Eigen::MatrixXd control_log_contrasts() const;

  void validate() const;
};

// Observed data selected from the potential counts by the assignment:
// arm indicators for parallel tables, start periods for stepped-wedge tables.
ClusterData realize(const PotentialTable& table, std::span<const int> assignment);
Panel realize(const SWPotentialTable& table, std::span<const int> start_periods);

}  // namespace crtnd
