#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "crtnd/rng.hpp"

namespace crtnd {

// Parallel designs: entry i is the arm (0/1) of cluster i.
// Stepped-wedge designs: entry i is the start period (1..T) of cluster i.
using Assignment = std::vector<int>;

inline constexpr std::uint64_t kDefaultEnumerationCap = 10'000'000;

// Complete randomization: uniform over all arm vectors with m1 treated, or
// over all start-period vectors with q_t clusters starting at period t.
class AssignmentScheme {
 public:
  enum class Kind { parallel, stepped_wedge };

  static AssignmentScheme parallel(int clusters, int treated);
  // starts_per_period[t-1] = q_t; clusters = sum of q.
  static AssignmentScheme stepped_wedge(std::vector<int> starts_per_period);

  Kind kind() const noexcept { return kind_; }
  int clusters() const noexcept { return clusters_; }
  // Parallel only.
  int treated() const noexcept { return treated_; }
  // Stepped-wedge only.
  int periods() const noexcept { return static_cast<int>(q_.size()); }
  const std::vector<int>& starts_per_period() const noexcept { return q_; }

  // m_t = number of clusters treated by period t, t = 1..T.
  std::vector<int> treated_by_period() const;
  // Periods t in 1..T-1 where both groups are nonempty. Periods where
  // everybody is still untreated (q_1 = 0) carry no contrast and are skipped.
  std::vector<int> analysis_periods() const;

  // Exact support size; nullopt when it does not fit in 64 bits.
  std::optional<std::uint64_t> total_assignments() const;
  // The assignment with clusters in canonical order (lexicographically first).
  Assignment first_assignment() const;
  bool in_support(const Assignment& a) const;

  friend bool operator==(const AssignmentScheme&, const AssignmentScheme&) = default;

 private:
  AssignmentScheme() = default;
  Kind kind_ = Kind::parallel;
  int clusters_ = 0;
  int treated_ = 0;
  std::vector<int> q_;
};

// Streams every support element exactly once in lexicographic order of the
// assignment vector (cluster positions in cluster_id order).
class AssignmentEnumerator {
 public:
  // Throws SupportTooLarge when the support exceeds `cap`.
  explicit AssignmentEnumerator(const AssignmentScheme& scheme, std::uint64_t cap = kDefaultEnumerationCap);

  // Writes the next assignment into `out`; false once exhausted.
  bool next(Assignment& out);
  std::uint64_t total() const noexcept { return total_; }

 private:
  Assignment current_;
  bool started_ = false;
  bool done_ = false;
  std::uint64_t total_ = 0;
};

std::vector<Assignment> enumerate_assignments(const AssignmentScheme& scheme,
                                              std::uint64_t cap = kDefaultEnumerationCap);

// Uniform draw from the support.
Assignment sample_assignment(const AssignmentScheme& scheme, Rng& rng);

// Exact binomial / multinomial coefficients with overflow detection.
std::optional<std::uint64_t> binomial_coefficient(int n, int k);
std::optional<std::uint64_t> multinomial_coefficient(const std::vector<int>& parts);

}  // namespace crtnd
