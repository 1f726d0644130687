#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hdnet/data.hpp"
#include "hdnet/errors.hpp"

namespace hdnet {

// Per-column linear map onto [0, 1]: y = (x - min) / (max - min).
// Columns with max == min are degenerate and always map to 0.
class Scaler {
 public:
  struct Column {
    std::string name;
    double min = 0.0;
    double max = 0.0;

    double delta() const noexcept { return max - min; }
    bool degenerate() const noexcept { return !(delta() > 0.0); }
  };

  struct Scaled {
    std::vector<double> values;
    std::vector<bool> out_of_range;  // input fell outside [min, max]

    bool any_out_of_range() const {
      for (bool b : out_of_range) {
        if (b) return true;
      }
      return false;
    }
  };

  Scaler() = default;
  explicit Scaler(std::vector<Column> columns) : columns_(std::move(columns)) {
    for (const auto& c : columns_) {
      if (!std::isfinite(c.min) || !std::isfinite(c.max) || c.max < c.min) {
        throw FormatError("scaler column " + c.name + ": invalid range");
      }
    }
  }

  const std::vector<Column>& columns() const noexcept { return columns_; }
  std::size_t size() const noexcept { return columns_.size(); }

  Scaled scale(std::span<const double> x) const {
    check_width(x.size());
    Scaled out{std::vector<double>(x.size()), std::vector<bool>(x.size(), false)};
    for (std::size_t c = 0; c < x.size(); ++c) {
      const auto& col = columns_[c];
      out.out_of_range[c] = x[c] < col.min || x[c] > col.max;
      out.values[c] = col.degenerate() ? 0.0 : (x[c] - col.min) / col.delta();
    }
    return out;
  }

  std::vector<double> unscale(std::span<const double> y) const {
    check_width(y.size());
    std::vector<double> x(y.size());
    for (std::size_t c = 0; c < y.size(); ++c) {
      const auto& col = columns_[c];
      x[c] = col.degenerate() ? col.min : y[c] * col.delta() + col.min;
    }
    return x;
  }

  nlohmann::json to_json() const {
    auto j = nlohmann::json::object();
    for (const auto& c : columns_) j[c.name] = {{"min", c.min}, {"max", c.max}};
    return j;
  }

  // Columns are matched by name against the heart schema so file key order
  // does not matter.
  static Scaler from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw FormatError("scaler JSON must be an object");
    std::vector<Column> cols;
    for (const auto& attr : heart_schema()) {
      const std::string name(attr.name);
      if (!j.contains(name)) throw FormatError("scaler JSON missing column " + name);
      const auto& e = j.at(name);
      if (!e.is_object() || !e.contains("min") || !e.contains("max") || !e["min"].is_number() ||
          !e["max"].is_number()) {
        throw FormatError("scaler JSON column " + name + " needs numeric min and max");
      }
      cols.push_back({name, e["min"].get<double>(), e["max"].get<double>()});
    }
    if (j.size() != cols.size()) throw FormatError("scaler JSON has unknown columns");
    return Scaler(std::move(cols));
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError(path, "cannot write scaler");
    out << to_json().dump(2) << '\n';
    if (!out) throw IoError(path, "cannot write scaler");
  }

  static Scaler load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path, "cannot open scaler");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("scaler JSON " + path + ": " + e.what());
    }
    return from_json(j);
  }

 private:
  void check_width(std::size_t n) const {
    if (n != columns_.size()) {
      throw ShapeError("scaler has " + std::to_string(columns_.size()) + " columns, got " +
                       std::to_string(n));
    }
  }

  std::vector<Column> columns_;
};

inline Scaler fit_scaler(const Dataset& ds) {
  std::vector<Scaler::Column> cols;
  for (std::size_t c = 0; c < kNumAttributes; ++c) {
    Scaler::Column col{std::string(heart_schema()[c].name), 0.0, 0.0};
    bool first = true;
    for (std::size_t r = 0; r < ds.size(); ++r) {
      if (ds.missing[r][c]) continue;
      const double v = ds.rows[r].features[c];
      if (first || v < col.min) col.min = v;
      if (first || v > col.max) col.max = v;
      first = false;
    }
    cols.push_back(std::move(col));
  }
  return Scaler(std::move(cols));
}

}  // namespace hdnet
