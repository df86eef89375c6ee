#pragma once

#include <filesystem>
#include <string>

#include "crtnd/simulation.hpp"

namespace crtnd::io {

// Scenario files are JSON objects. An optional "base" key names a shipped
// scenario ("parallel_default", "stepped_wedge_default",
// "dose_response_default") whose fields the remaining keys override.
SimScenario parse_scenario(const std::string& text, const std::string& source = "<input>");
SimScenario load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const SimScenario& scenario);

}  // namespace crtnd::io
