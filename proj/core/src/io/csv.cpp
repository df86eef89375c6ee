#include "crtnd/io/csv.hpp"

#include <charconv>
#include <cmath>

#include "crtnd/error.hpp"

namespace crtnd::io {

CsvTable read_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool quoted_field = false;
  int line = 1;
  int record_line = 1;
  auto end_field = [&] {
    if (!quoted_field && !field.empty() && field.back() == '\r') field.pop_back();
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
    quoted_field = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) {
      if (table.header.empty()) {
        table.header = std::move(record);
      } else {
        table.rows.push_back(std::move(record));
        table.line_numbers.push_back(record_line);
      }
    }
    record.clear();
  };

  char ch;
  while (in.get(ch)) {
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started) {
          fail(ErrorCode::ParseError, source + ":" + std::to_string(line) + ": stray quote inside an unquoted field");
        }
        in_quotes = true;
        field_started = true;
        quoted_field = true;
        break;
      case ',':
        end_field();
        break;
      case '\n':
        end_record();
        ++line;
        record_line = line;
        break;
      default:
        if (quoted_field) {
          if (ch == '\r') break;  // CRLF line ending after a closing quote
          fail(ErrorCode::ParseError, source + ":" + std::to_string(line) + ": text after a closing quote");
        }
        field.push_back(ch);
        field_started = true;
    }
  }
  require(!in_quotes, ErrorCode::ParseError, source + ":" + std::to_string(line) + ": unterminated quoted field");
  if (field_started || !record.empty()) end_record();
  require(!table.header.empty(), ErrorCode::SchemaError, source + ": empty file, expected a header row");
  return table;
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n\r") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

bool parse_number(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

bool parse_integer(const std::string& text, long long& out) {
  if (text.empty()) return false;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

}  // namespace crtnd::io
