#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "hdnet/scaler.hpp"
#include "oracles.hpp"

using namespace hdnet;

namespace {

const std::string kCleveland = std::string(HDNET_DATA_DIR) + "/heart_cleveland_binary.csv";

Dataset with_column(std::size_t col, const std::vector<double>& values) {
  Dataset ds;
  for (double v : values) {
    Row r;
    r.features.fill(1.0);
    r.features[col] = v;
    ds.rows.push_back(r);
    ds.missing.push_back({});
  }
  return ds;
}

}  // namespace

TEST(FitScaler, ExtremesOfColumn) {
  const auto s = fit_scaler(with_column(0, {29, 77, 54}));
  const auto& age = s.columns()[0];
  EXPECT_EQ(age.name, "Age");
  EXPECT_EQ(age.min, 29.0);
  EXPECT_EQ(age.max, 77.0);
  EXPECT_EQ(age.delta(), 48.0);
  EXPECT_FALSE(age.degenerate());
}

TEST(FitScaler, ConstantColumnIsDegenerate) {
  const auto s = fit_scaler(with_column(3, {1, 1, 1}));
  EXPECT_EQ(s.columns()[3].delta(), 0.0);
  EXPECT_TRUE(s.columns()[3].degenerate());
}

TEST(FitScaler, AgeRangeMatchesIndependentScan) {
  // Oracle: first field of every line, parsed with stod.
  std::ifstream in(kCleveland);
  std::string line;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  while (std::getline(in, line)) {
    const double v = std::stod(line.substr(0, line.find(',')));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const auto s = fit_scaler(impute(load_dataset(kCleveland), ImputePolicy::median_mode));
  EXPECT_EQ(s.columns()[0].min, lo);
  EXPECT_EQ(s.columns()[0].max, hi);
  EXPECT_EQ(lo, 29.0);
  EXPECT_EQ(hi, 77.0);
}

TEST(Scale, EndpointsAndInterior) {
  const auto s = fit_scaler(with_column(0, {29, 77, 54}));
  Features x{};
  x.fill(1.0);
  x[0] = 29;
  EXPECT_EQ(s.scale(x).values[0], 0.0);
  x[0] = 77;
  EXPECT_EQ(s.scale(x).values[0], 1.0);
  x[0] = 54;
  // 25/48 = 0.520833333333333333... (40-digit evaluation)
  EXPECT_NEAR(s.scale(x).values[0], 0.5208333333333333333, 1e-16);
  EXPECT_FALSE(s.scale(x).any_out_of_range());
}

TEST(Scale, DegenerateColumnMapsToZero) {
  const auto s = fit_scaler(with_column(3, {1, 1, 1}));
  Features x{};
  x.fill(1.0);
  for (double v : {-5.0, 1.0, 1e6}) {
    x[3] = v;
    EXPECT_EQ(s.scale(x).values[3], 0.0);
  }
}

TEST(Scale, OutOfRangeExtrapolatesAndIsFlagged) {
  const auto s = fit_scaler(with_column(0, {29, 77}));
  Features x{};
  x.fill(1.0);
  x[0] = 101;
  const auto r = s.scale(x);
  EXPECT_DOUBLE_EQ(r.values[0], 1.5);
  EXPECT_TRUE(r.out_of_range[0]);
  EXPECT_TRUE(r.any_out_of_range());
}

TEST(Scale, WrongWidthIsShapeError) {
  const auto s = fit_scaler(with_column(0, {29, 77}));
  EXPECT_THROW(s.scale(std::vector<double>(12, 0.0)), ShapeError);
}

TEST(ScalerProperty, TrainingFeaturesInUnitInterval) {
  const auto ds = impute(load_dataset(kCleveland), ImputePolicy::median_mode);
  const auto s = fit_scaler(ds);
  for (const auto& row : ds.rows) {
    const auto r = s.scale(row.features);
    for (double v : r.values) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
    ASSERT_FALSE(r.any_out_of_range());
  }
}

TEST(ScalerProperty, RoundTripWithinRelativeTolerance) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> mag(-1e6, 1e6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Scaler::Column> cols;
    Features x{};
    for (std::size_t c = 0; c < kNumAttributes; ++c) {
      const double a = mag(gen), b = mag(gen);
      cols.push_back({"c" + std::to_string(c), std::min(a, b), std::max(a, b)});
      x[c] = cols.back().min + unit(gen) * cols.back().delta();
    }
    const Scaler s(cols);
    const auto back = s.unscale(s.scale(x).values);
    for (std::size_t c = 0; c < kNumAttributes; ++c) {
      ASSERT_LE(std::abs(back[c] - x[c]), 1e-12 * std::max(1.0, std::abs(x[c])));
    }
  }
}

TEST(ScalerJson, RoundTripExact) {
  const auto s = fit_scaler(impute(load_dataset(kCleveland), ImputePolicy::median_mode));
  const auto j = s.to_json();
  ASSERT_TRUE(j.contains("Age"));
  EXPECT_EQ(j["Age"]["min"].get<double>(), 29.0);
  const auto back = Scaler::from_json(nlohmann::json::parse(j.dump()));
  for (std::size_t c = 0; c < kNumAttributes; ++c) {
    EXPECT_EQ(back.columns()[c].name, s.columns()[c].name);
    EXPECT_EQ(back.columns()[c].min, s.columns()[c].min);
    EXPECT_EQ(back.columns()[c].max, s.columns()[c].max);
  }
}

TEST(ScalerJson, RejectsMalformed) {
  EXPECT_THROW(Scaler::from_json(nlohmann::json::array()), FormatError);
  auto j = fit_scaler(with_column(0, {1, 2})).to_json();
  j.erase("Thal");
  EXPECT_THROW(Scaler::from_json(j), FormatError);
  auto k = fit_scaler(with_column(0, {1, 2})).to_json();
  k["Extra"] = {{"min", 0}, {"max", 1}};
  EXPECT_THROW(Scaler::from_json(k), FormatError);
  auto m = fit_scaler(with_column(0, {1, 2})).to_json();
  m["Age"]["min"] = 5;
  EXPECT_THROW(Scaler::from_json(m), FormatError);
}
