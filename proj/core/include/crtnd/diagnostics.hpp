#pragma once

#include <cstdint>

#include "crtnd/assignment.hpp"
#include "crtnd/model.hpp"

namespace crtnd {

// Bias of the log odds ratio under heterogeneous ascertainment, computed two
// ways over the full parallel support with `treated` clusters treated:
//   expression  E[log{sum c A OY0 / sum (1-A) OY0 * sum (1-A) OZ0 / sum c A OZ0}]
//   enumerated  E[log lambda-hat] - log lambda from realized data sets
struct OddsRatioBias {
  double expression = 0.0;
  double enumerated = 0.0;
  std::uint64_t assignments = 0;
};
OddsRatioBias odds_ratio_bias(const PotentialTable& table, int treated, std::uint64_t cap = kDefaultEnumerationCap);

// E[T - E~_T] split into its two terms, with U_i = OZ0_i / OY0_i:
//   first_term     (1/m) sum (lambda - 1) U / ((lambda + U)(1 + U)), the exact mean of T
//   mean_expected  E[E~_T(r)] over the support
// mean_t is the enumerated mean of T, which matches first_term.
struct TpfBiasDecomposition {
  double first_term = 0.0;
  double mean_expected = 0.0;
  double bias = 0.0;  // first_term - mean_expected
  double mean_t = 0.0;
  std::uint64_t assignments = 0;
};
TpfBiasDecomposition tpf_bias_decomposition(const PotentialTable& table, int treated,
                                            std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace crtnd
