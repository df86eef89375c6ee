#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "crtnd/assignment.hpp"

namespace crtnd::io {

inline constexpr int kSchemaVersion = 1;

enum class Command { analyze, analyze_sw, dose_response, simulate, simulate_sw, sweep };
enum class CiChoice { normal, invert_permutation, invert_normal };
enum class ModeChoice { exact, monte_carlo };
enum class WeightsChoice { equal, optimal, file };

std::string_view to_string(Command c) noexcept;
std::string_view to_string(CiChoice c) noexcept;
std::string_view to_string(ModeChoice c) noexcept;
std::string_view to_string(WeightsChoice c) noexcept;

struct RunConfig {
  Command command = Command::analyze;
  std::string input_path;
  std::string output_path;  // JSON report; a .csv sibling is written next to it
  std::optional<double> alpha;  // default 0.05; scenarios keep their own unless set
  CiChoice ci_method = CiChoice::normal;
  ModeChoice mode = ModeChoice::exact;
  std::uint64_t draws = 10'000;
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;
  std::optional<std::uint64_t> seed;  // overrides a scenario's seed when set
  bool continuity_correction = false;
  WeightsChoice weights = WeightsChoice::equal;
  std::string weights_file;
  std::optional<std::string> sigma_convention;  // canonical | printed
  bool adjust_covariates = false;
  std::vector<std::string> estimators;
  std::optional<std::uint64_t> replicates;
  std::optional<double> lambda;
  int configs = 100;
  int threads = 0;  // not echoed: results do not depend on it
  bool raw = false;
};

// Throws InvalidConfig on inconsistent settings.
void validate(const RunConfig& config);

// Runs one command. Returns 0 on success, 2 on validation errors and 3 on
// computational errors; errors are also written to `err` as JSON.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

std::string version();

}  // namespace crtnd::io
