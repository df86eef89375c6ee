#pragma once

#include <istream>
#include <string>
#include <vector>

namespace crtnd::io {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;  // 1-based source line of each row
};

// RFC 4180 style: comma separated, double-quoted fields may contain commas,
// quotes ("") and newlines. Blank lines are skipped; fields are not trimmed
// except for a trailing '\r'.
CsvTable read_csv(std::istream& in, const std::string& source);

std::string csv_field(const std::string& value);
// Shortest decimal form that parses back to the same double.
std::string format_number(double value);
bool parse_number(const std::string& text, double& out);
bool parse_integer(const std::string& text, long long& out);

}  // namespace crtnd::io
