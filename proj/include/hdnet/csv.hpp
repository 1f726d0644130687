#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "hdnet/data.hpp"
#include "hdnet/errors.hpp"

namespace hdnet {

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

// Reads a headed CSV file into rows of string fields. The header must match
// `expected_header` exactly.
inline std::vector<std::vector<std::string>> read_csv(const std::string& path, std::string_view expected_header) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open CSV");
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != expected_header) {
    throw FormatError(path + ": expected header '" + std::string(expected_header) + "'");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> fields;
    for (auto f : detail::split_fields(detail::trim(line))) fields.emplace_back(f);
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace hdnet
