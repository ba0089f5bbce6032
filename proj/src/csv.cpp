#include "grouse/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "grouse/error.hpp"

namespace grouse::csv {

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    std::string_view field = line.substr(start, pos == std::string_view::npos ? pos : pos - start);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
    out.emplace_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view token) {
  const std::string s(token);
  if (s.empty()) throw Error(ErrorKind::io, "empty numeric field");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw Error(ErrorKind::io, "malformed number: " + s);
  return v;
}

std::size_t parse_count(std::string_view token) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw Error(ErrorKind::io, "malformed count: " + std::string(token));
  }
  return v;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error(ErrorKind::io, "missing column: " + std::string(name));
}

double Table::number(std::size_t row, std::string_view name) const {
  return parse_double(rows.at(row).at(column(name)));
}

Table read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  Table table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (first) {
      table.header = std::move(fields);
      first = false;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw Error(ErrorKind::io, path + ": row width differs from header");
    }
    table.rows.push_back(std::move(fields));
  }
  if (first) throw Error(ErrorKind::io, path + ": empty file");
  return table;
}

void write(const std::string& path, const Table& table) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  auto emit = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out << ',';
      out << fields[i];
    }
    out << '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) emit(row);
  out.flush();
  if (!out) throw Error(ErrorKind::io, "write failed: " + path);
}

}  // namespace grouse::csv
