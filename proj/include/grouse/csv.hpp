#pragma once

// Minimal CSV plumbing shared by the report writers. Numbers are written with
// 17 significant digits so binary64 values survive a round trip exactly.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace grouse::csv {

std::vector<std::string> split(std::string_view line, char sep);
double parse_double(std::string_view token);
std::size_t parse_count(std::string_view token);
std::string format_double(double value);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws if absent.
  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::string_view name) const;
};

Table read(const std::string& path);

/// Writes header and rows; throws grouse::Error(io) on failure.
void write(const std::string& path, const Table& table);

}  // namespace grouse::csv
