#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <variant>

#include "crtnd/model.hpp"

namespace crtnd::io {

// Parallel schema:       cluster_id, arm, y_count, z_count, [x1..xp], [dose]
// Stepped-wedge schema:  cluster_id, period, start_period, y_count, z_count
enum class DatasetKind { parallel, stepped_wedge };

using Dataset = std::variant<ClusterData, Panel>;

// Records come back sorted by cluster_id. Errors carry the source line.
ClusterData parse_parallel(std::istream& in, const std::string& source = "<input>");
Panel parse_stepped_wedge(std::istream& in, const std::string& source = "<input>");
Dataset parse_dataset(std::istream& in, const std::string& source = "<input>");
Dataset parse_dataset(const std::filesystem::path& path);

void write_parallel(std::ostream& out, std::span<const ClusterRecord> data);
void write_stepped_wedge(std::ostream& out, const Panel& panel);

}  // namespace crtnd::io
