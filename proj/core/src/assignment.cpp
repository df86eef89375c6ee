#include "crtnd/assignment.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "crtnd/error.hpp"

namespace crtnd {

namespace {
__extension__ using u128 = unsigned __int128;
}  // namespace

std::optional<std::uint64_t> binomial_coefficient(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  u128 result = 1;
  for (int i = 1; i <= k; ++i) {
    // result * (n - k + i) / i stays integral at every step.
    result = result * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (result > std::numeric_limits<std::uint64_t>::max()) return std::nullopt;
  }
  return static_cast<std::uint64_t>(result);
}

std::optional<std::uint64_t> multinomial_coefficient(const std::vector<int>& parts) {
  u128 result = 1;
  int n = 0;
  for (int q : parts) {
    n += q;
    const auto b = binomial_coefficient(n, q);
    if (!b) return std::nullopt;
    result *= *b;
    if (result > std::numeric_limits<std::uint64_t>::max()) return std::nullopt;
  }
  return static_cast<std::uint64_t>(result);
}

AssignmentScheme AssignmentScheme::parallel(int clusters, int treated) {
  require(clusters >= 2, ErrorCode::InvalidScheme, "a parallel design needs at least 2 clusters");
  require(treated >= 1 && treated <= clusters - 1, ErrorCode::InvalidScheme,
          "treated count must satisfy 1 <= m1 <= m-1 (got m=" + std::to_string(clusters) +
              ", m1=" + std::to_string(treated) + ")");
  AssignmentScheme s;
  s.kind_ = Kind::parallel;
  s.clusters_ = clusters;
  s.treated_ = treated;
  return s;
}

AssignmentScheme AssignmentScheme::stepped_wedge(std::vector<int> starts_per_period) {
  require(starts_per_period.size() >= 2, ErrorCode::InvalidScheme, "a stepped-wedge design needs T >= 2");
  for (int q : starts_per_period) {
    require(q >= 0, ErrorCode::InvalidScheme, "per-period start counts must be nonnegative");
  }
  AssignmentScheme s;
  s.kind_ = Kind::stepped_wedge;
  s.clusters_ = std::accumulate(starts_per_period.begin(), starts_per_period.end(), 0);
  s.q_ = std::move(starts_per_period);
  require(s.clusters_ >= 2, ErrorCode::InvalidScheme, "a stepped-wedge design needs at least 2 clusters");
  require(!s.analysis_periods().empty(), ErrorCode::InvalidScheme,
          "no period t < T has both treated and untreated clusters");
  return s;
}

std::vector<int> AssignmentScheme::treated_by_period() const {
  std::vector<int> m_t(q_.size());
  std::partial_sum(q_.begin(), q_.end(), m_t.begin());
  return m_t;
}

std::vector<int> AssignmentScheme::analysis_periods() const {
  std::vector<int> out;
  const auto m_t = treated_by_period();
  for (int t = 1; t + 1 <= periods(); ++t) {
    if (m_t[t - 1] >= 1 && clusters_ - m_t[t - 1] >= 1) out.push_back(t);
  }
  return out;
}

std::optional<std::uint64_t> AssignmentScheme::total_assignments() const {
  if (kind_ == Kind::parallel) return binomial_coefficient(clusters_, treated_);
  return multinomial_coefficient(q_);
}

Assignment AssignmentScheme::first_assignment() const {
  Assignment a;
  a.reserve(static_cast<std::size_t>(clusters_));
  if (kind_ == Kind::parallel) {
    a.assign(static_cast<std::size_t>(clusters_ - treated_), 0);
    a.insert(a.end(), static_cast<std::size_t>(treated_), 1);
  } else {
    for (int t = 1; t <= periods(); ++t) a.insert(a.end(), static_cast<std::size_t>(q_[t - 1]), t);
  }
  return a;
}

bool AssignmentScheme::in_support(const Assignment& a) const {
  if (static_cast<int>(a.size()) != clusters_) return false;
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  return sorted == first_assignment();
}

AssignmentEnumerator::AssignmentEnumerator(const AssignmentScheme& scheme, std::uint64_t cap)
    : current_(scheme.first_assignment()) {
  const auto total = scheme.total_assignments();
  require(total.has_value() && *total <= cap, ErrorCode::SupportTooLarge,
          "support has " + (total ? std::to_string(*total) : std::string("more than 2^64")) +
              " assignments, cap is " + std::to_string(cap) + "; use Monte Carlo mode");
  total_ = *total;
}

bool AssignmentEnumerator::next(Assignment& out) {
  if (done_) return false;
  if (started_) {
    // Multiset permutations in lexicographic order.
    if (!std::next_permutation(current_.begin(), current_.end())) {
      done_ = true;
      return false;
    }
  }
  started_ = true;
  out = current_;
  return true;
}

std::vector<Assignment> enumerate_assignments(const AssignmentScheme& scheme, std::uint64_t cap) {
  AssignmentEnumerator e(scheme, cap);
  std::vector<Assignment> out;
  out.reserve(static_cast<std::size_t>(e.total()));
  Assignment a;
  while (e.next(a)) out.push_back(a);
  return out;
}

Assignment sample_assignment(const AssignmentScheme& scheme, Rng& rng) {
  Assignment a = scheme.first_assignment();
  // Fisher-Yates; every arrangement of the multiset is equally likely.
  for (std::size_t i = a.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(a[i - 1], a[pick(rng)]);
  }
  return a;
}

}  // namespace crtnd
