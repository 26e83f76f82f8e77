#pragma once

// Minimal CSV helpers: shortest round-trip number formatting and a
// comma-split reader for files written by this library (no quoting).

#include <charconv>
#include <cmath>
#include <istream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ctopt/errors.hpp"

namespace ctopt {

/// Shortest representation that parses back to the same double; "nan", "inf", "-inf" otherwise.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw InvalidInput("not a number: '" + std::string(s) + "'");
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline CsvTable read_csv(std::istream& is) {
  CsvTable table;
  std::string line;
  if (!std::getline(is, line)) throw InvalidInput("empty CSV input");
  table.header = split_csv_line(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    table.rows.push_back(split_csv_line(line));
    if (table.rows.back().size() != table.header.size()) throw InvalidInput("ragged CSV row");
  }
  return table;
}

}  // namespace ctopt
