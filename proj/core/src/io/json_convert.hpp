#pragma once

#include <json.hpp>

#include "crtnd/inference.hpp"
#include "crtnd/report.hpp"
#include "crtnd/simulation.hpp"
#include "crtnd/stepped_wedge.hpp"

namespace crtnd::io {

// Non-finite doubles become the strings "inf", "-inf" and "nan" so that
// unbounded intervals survive the round trip through JSON.
nlohmann::json number_json(double v);

nlohmann::json to_json(const EstimateReport& r);
nlohmann::json to_json(const PermutationResult& r);
nlohmann::json to_json(const MetricsRow& r);
nlohmann::json to_json(const ReplicateEstimate& r);
nlohmann::json to_json(const SWWeights& w);

}  // namespace crtnd::io
