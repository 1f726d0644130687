#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "hdnet/errors.hpp"
#include "hdnet/rng.hpp"

namespace hdnet {

inline constexpr std::size_t kNumAttributes = 13;
inline constexpr std::size_t kNumFields = kNumAttributes + 1;
inline constexpr int kNumClasses = 4;

enum class AttributeKind { continuous, categorical };

struct Attribute {
  std::string_view name;
  AttributeKind kind;
  std::vector<double> allowed_values;  // empty for continuous columns
  std::size_t column_index;
};

using AttributeSchema = std::array<Attribute, kNumAttributes>;

// Cleveland heart-disease attributes in file order.
inline const AttributeSchema& heart_schema() {
  using K = AttributeKind;
  static const AttributeSchema schema{{
      {"Age", K::continuous, {}, 0},
      {"Sex", K::categorical, {0, 1}, 1},
      {"Cp", K::categorical, {1, 2, 3, 4}, 2},
      {"Trestbps", K::continuous, {}, 3},
      {"Chol", K::continuous, {}, 4},
      {"Fbs", K::categorical, {0, 1}, 5},
      {"Restecg", K::categorical, {0, 1, 2}, 6},
      {"Thalach", K::continuous, {}, 7},
      {"Exang", K::categorical, {0, 1}, 8},
      {"Oldpeak", K::continuous, {}, 9},
      {"Slope", K::categorical, {1, 2, 3}, 10},
      {"Ca", K::continuous, {}, 11},
      {"Thal", K::categorical, {3, 6, 7}, 12},
  }};
  return schema;
}

using Features = std::array<double, kNumAttributes>;
using MissingMask = std::array<bool, kNumAttributes>;

struct Row {
  Features features{};
  int label = 0;

  friend bool operator==(const Row&, const Row&) = default;
};

struct Dataset {
  std::vector<Row> rows;
  std::vector<MissingMask> missing;  // parallel to rows
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return rows.size(); }
  bool empty() const noexcept { return rows.empty(); }
  const AttributeSchema& schema() const noexcept { return heart_schema(); }

  std::size_t missing_cells() const {
    std::size_t n = 0;
    for (const auto& m : missing) n += static_cast<std::size_t>(std::count(m.begin(), m.end(), true));
    return n;
  }
};

enum class LabelPolicy { strict, clamp };
enum class ImputePolicy { drop_rows, median_mode };

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    fields.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

inline std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

}  // namespace detail

// Parses comma-separated text: 13 attributes then the class, "?" marks a
// missing attribute. A first row whose leading field is non-numeric is
// treated as a header and skipped. Blank lines are ignored.
inline Dataset parse_dataset(std::istream& in, LabelPolicy label_policy = LabelPolicy::clamp) {
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    const auto fields = detail::split_fields(text);
    if (first_content) {
      first_content = false;
      if (fields.front() != "?" && !detail::parse_number(fields.front())) continue;
    }
    if (fields.size() != kNumFields) {
      throw ParseError(line_no, "expected " + std::to_string(kNumFields) + " fields, got " +
                                    std::to_string(fields.size()));
    }

    Row row;
    MissingMask mask{};
    for (std::size_t c = 0; c < kNumAttributes; ++c) {
      if (fields[c] == "?") {
        mask[c] = true;
        row.features[c] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const auto v = detail::parse_number(fields[c]);
      if (!v) {
        throw ParseError(line_no, "column " + std::string(heart_schema()[c].name) +
                                      ": not a number: '" + std::string(fields[c]) + "'");
      }
      row.features[c] = *v;
    }

    const auto label_text = fields[kNumAttributes];
    const auto label = detail::parse_number(label_text);
    if (!label || *label != std::floor(*label)) {
      throw ParseError(line_no, "class label is not an integer: '" + std::string(label_text) + "'");
    }
    if (*label < 0) {
      throw ValidationError("line " + std::to_string(line_no) + ": negative class label " +
                            std::string(label_text));
    }
    if (*label >= kNumClasses) {
      if (label_policy == LabelPolicy::strict) {
        throw ValidationError("line " + std::to_string(line_no) + ": class label " +
                              std::string(label_text) + " outside 0..3");
      }
      ds.warnings.push_back("line " + std::to_string(line_no) + ": class label " +
                            std::string(label_text) + " clamped to 3");
      row.label = kNumClasses - 1;
    } else {
      row.label = static_cast<int>(*label);
    }

    ds.rows.push_back(row);
    ds.missing.push_back(mask);
  }
  return ds;
}

inline Dataset load_dataset(const std::string& path, LabelPolicy label_policy = LabelPolicy::clamp) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open data file");
  return parse_dataset(in, label_policy);
}

namespace detail {

inline double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Most frequent value; ties go to the smallest.
inline double mode_of(const std::vector<double>& values) {
  std::map<double, std::size_t> counts;
  for (double v : values) ++counts[v];
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

}  // namespace detail

inline Dataset impute(const Dataset& in, ImputePolicy policy) {
  Dataset out;
  out.warnings = in.warnings;

  if (policy == ImputePolicy::drop_rows) {
    for (std::size_t r = 0; r < in.size(); ++r) {
      const auto& m = in.missing[r];
      if (std::find(m.begin(), m.end(), true) != m.end()) continue;
      out.rows.push_back(in.rows[r]);
      out.missing.push_back(m);
    }
    return out;
  }

  out.rows = in.rows;
  out.missing.assign(in.size(), MissingMask{});
  for (std::size_t c = 0; c < kNumAttributes; ++c) {
    std::vector<double> present;
    bool any_missing = false;
    for (std::size_t r = 0; r < in.size(); ++r) {
      if (in.missing[r][c]) {
        any_missing = true;
      } else {
        present.push_back(in.rows[r].features[c]);
      }
    }
    if (!any_missing) continue;
    const auto& attr = heart_schema()[c];
    if (present.empty()) {
      throw ImputationError("column " + std::string(attr.name) + " has no present values");
    }
    const double fill = attr.kind == AttributeKind::continuous ? detail::median_of(std::move(present))
                                                               : detail::mode_of(present);
    for (std::size_t r = 0; r < in.size(); ++r) {
      if (in.missing[r][c]) out.rows[r].features[c] = fill;
    }
  }
  return out;
}

// Two output neurons carry the class index in binary, high bit first.
using ClassCode = std::array<double, 2>;

inline ClassCode encode_class(int label) {
  if (label < 0 || label >= kNumClasses) {
    throw ValidationError("class label " + std::to_string(label) + " outside 0..3");
  }
  return {static_cast<double>((label >> 1) & 1), static_cast<double>(label & 1)};
}

// Each output is thresholded at 0.5 (ties count as 1).
inline int decode_output(std::span<const double> output) {
  if (output.size() != 2) {
    throw ValidationError("decode_output expects 2 outputs, got " + std::to_string(output.size()));
  }
  return (output[0] >= 0.5 ? 2 : 0) + (output[1] >= 0.5 ? 1 : 0);
}

struct SplitResult {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

inline SplitResult split(const Dataset& ds, std::size_t n_train, std::size_t n_test, std::uint64_t seed) {
  if (n_train + n_test > ds.size()) {
    throw SizeError("requested " + std::to_string(n_train) + " train + " + std::to_string(n_test) +
                    " test rows, dataset has " + std::to_string(ds.size()));
  }
  auto rng = make_rng(seed, 0x5e1175u);
  const auto order = shuffled_indices(ds.size(), rng);

  SplitResult out;
  out.train.warnings = ds.warnings;
  out.test.warnings = ds.warnings;
  auto take = [&](std::size_t from, std::size_t n, Dataset& dst, std::vector<std::size_t>& idx) {
    for (std::size_t k = from; k < from + n; ++k) {
      idx.push_back(order[k]);
      dst.rows.push_back(ds.rows[order[k]]);
      dst.missing.push_back(ds.missing[order[k]]);
    }
  };
  take(0, n_train, out.train, out.train_indices);
  take(n_train, n_test, out.test, out.test_indices);
  return out;
}

}  // namespace hdnet
