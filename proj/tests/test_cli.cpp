#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "hdnet_cli.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace hdnet;

namespace {

const std::string kCleveland = std::string(HDNET_DATA_DIR) + "/heart_cleveland_binary.csv";
const std::string kFixture = std::string(HDNET_FIXTURE_DIR) + "/heart_synthetic_50.csv";

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = oracle::temp_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, TrainWritesArtifacts) {
  const auto r = run({"train", "--data", kFixture, "--out", path("run"), "--seed", "3", "--max-epochs", "40",
                      "--workers", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"model.json", "scaler.json", "history.csv", "config.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "run" / f)) << f;
  }
  EXPECT_NE(r.out.find("epochs: 40"), std::string::npos);
  EXPECT_NE(r.out.find("final sse: "), std::string::npos);

  const auto history = read_history_csv(path("run/history.csv"));
  EXPECT_EQ(history.size(), 40u);
}

TEST_F(CliTest, TrainMissingDataFileNamesPath) {
  const auto r = run({"train", "--data", path("nope.csv"), "--out", path("run")});
  EXPECT_EQ(r.code, cli::kIoError);
  EXPECT_NE(r.err.find(path("nope.csv")), std::string::npos);
}

TEST_F(CliTest, TrainRerunIsByteIdentical) {
  const std::vector<std::string> common{"--data", kFixture, "--seed", "9", "--max-epochs", "30", "--layers", "13,5,2"};
  auto a = common, b = common;
  a.insert(a.begin(), {"train", "--out", path("a")});
  b.insert(b.begin(), {"train", "--out", path("b"), "--workers", "4"});
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  EXPECT_EQ(oracle::read_file(dir_ / "a" / "model.json"), oracle::read_file(dir_ / "b" / "model.json"));
  EXPECT_EQ(oracle::read_file(dir_ / "a" / "history.csv"), oracle::read_file(dir_ / "b" / "history.csv"));
}

TEST_F(CliTest, TrainDataErrors) {
  const auto bad = oracle::write_file(dir_ / "bad.csv", "63,1,1,145,233,1,2,150,0,2.3,3,0,6,0\n1,2,3\n");
  auto r = run({"train", "--data", bad, "--out", path("run")});
  EXPECT_EQ(r.code, cli::kDataError);
  EXPECT_NE(r.err.find("expected 14 fields, got 3"), std::string::npos);

  const auto four = oracle::write_file(dir_ / "four.csv", "63,1,1,145,233,1,2,150,0,2.3,3,0,6,4\n");
  r = run({"train", "--data", four, "--out", path("run"), "--labels", "strict"});
  EXPECT_EQ(r.code, cli::kDataError);
  r = run({"train", "--data", four, "--out", path("run"), "--labels", "clamp", "--max-epochs", "2"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("clamped"), std::string::npos);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, cli::kUsage);
  EXPECT_EQ(run({"fly"}).code, cli::kUsage);
  EXPECT_EQ(run({"train", "--impute", "maybe"}).code, cli::kUsage);
  EXPECT_EQ(run({"train", "--data", kFixture, "--layers", "13,4"}).code, cli::kUsage);
  EXPECT_EQ(run({"train", "--data", kFixture, "--layers", "13,4,4,4,4,2"}).code, cli::kUsage);

  const auto cfg = oracle::write_file(dir_ / "cfg.json", R"({"data_path": "x.csv", "learning_rate": 0.3})");
  const auto r = run({"train", "--config", cfg});
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_NE(r.err.find("learning_rate"), std::string::npos);

  const auto bad_momentum = oracle::write_file(dir_ / "m.json", R"({"momentum": 1.5})");
  EXPECT_EQ(run({"train", "--config", bad_momentum, "--data", kFixture}).code, cli::kUsage);
}

TEST_F(CliTest, MaxLayersOverride) {
  const auto cfg = oracle::write_file(dir_ / "cfg.json", R"({"max_layers": 6, "max_epochs": 2})");
  const auto r = run({"train", "--config", cfg, "--data", kFixture, "--out", path("run"), "--layers", "13,4,4,4,4,2"});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(CliTest, EvaluatePrintsEfficiencyAndConfusion) {
  ASSERT_EQ(run({"train", "--data", kFixture, "--out", path("run"), "--max-epochs", "50"}).code, 0);
  const auto r = run({"evaluate", "--model", path("run/model.json"), "--scaler", path("run/scaler.json"), "--data",
                      kFixture, "--binary", "--out", path("eval")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("efficiency (4-class): "), std::string::npos);
  EXPECT_NE(r.out.find("efficiency (normal vs abnormal): "), std::string::npos);
  EXPECT_NE(r.out.find("true\\pred"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "eval" / "metrics.json"));

  const auto plain = run({"evaluate", "--model", path("run/model.json"), "--scaler", path("run/scaler.json"),
                          "--data", kFixture});
  ASSERT_EQ(plain.code, 0);
  EXPECT_EQ(plain.out.find("normal vs abnormal"), std::string::npos);
}

TEST_F(CliTest, EvaluateRejectsBadModel) {
  ASSERT_EQ(run({"train", "--data", kFixture, "--out", path("run"), "--max-epochs", "2"}).code, 0);
  const auto corrupted = oracle::write_file(dir_ / "corrupt.json", "{\"format_version\": 1, \"layer_sizes\": [");
  auto r = run({"evaluate", "--model", corrupted, "--scaler", path("run/scaler.json"), "--data", kFixture});
  EXPECT_EQ(r.code, cli::kDataError);
  EXPECT_NE(r.err.find("format error"), std::string::npos);

  auto j = nlohmann::json::parse(oracle::read_file(dir_ / "run" / "model.json"));
  j["format_version"] = 99;
  const auto future = oracle::write_file(dir_ / "future.json", j.dump());
  r = run({"evaluate", "--model", future, "--scaler", path("run/scaler.json"), "--data", kFixture});
  EXPECT_EQ(r.code, cli::kDataError);
  EXPECT_NE(r.err.find("format_version"), std::string::npos);
}

TEST_F(CliTest, ExperimentDefaultGridHasEightRows) {
  const auto r = run({"experiment", "--data", kFixture, "--out", path("exp"), "--max-epochs", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(oracle::read_file(dir_ / "exp" / "report.csv")), 9u);
  EXPECT_TRUE(fs::exists(dir_ / "exp" / "report.json"));
  // 50 rows cannot hold 100 + 300; the table shows both sizes.
  EXPECT_NE(r.out.find("100/300"), std::string::npos);
  EXPECT_NE(r.out.find("12/37*"), std::string::npos);
}

TEST_F(CliTest, ExperimentGridOverrideAndDeterminism) {
  const auto cfg = oracle::write_file(
      dir_ / "cfg.json",
      R"({"splits": [[20, 10], [30, 20], [10, 10]], "architectures": ["multi"], "max_epochs": 8, "seed": 4})");
  const auto a = run({"experiment", "--config", cfg, "--data", kFixture, "--out", path("a")});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(count_lines(oracle::read_file(dir_ / "a" / "report.csv")), 4u);
  const auto b = run({"experiment", "--config", cfg, "--data", kFixture, "--out", path("b"), "--workers", "3"});
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(oracle::read_file(dir_ / "a" / "report.csv"), oracle::read_file(dir_ / "b" / "report.csv"));
}

TEST_F(CliTest, EchoedConfigReproducesRun) {
  ASSERT_EQ(run({"train", "--data", kFixture, "--out", path("first"), "--seed", "21", "--max-epochs", "25",
                 "--impute", "drop", "--layers", "13,6,2"})
                .code,
            0);
  const auto echoed = path("first/config.json");
  const auto cfg = nlohmann::json::parse(oracle::read_file(echoed));
  EXPECT_EQ(cfg["seed"], 21);
  EXPECT_EQ(cfg["impute"], "drop");
  ASSERT_EQ(run({"train", "--config", echoed, "--out", path("second")}).code, 0);
  EXPECT_EQ(oracle::read_file(dir_ / "first" / "model.json"), oracle::read_file(dir_ / "second" / "model.json"));
}

TEST_F(CliTest, ScaleWritesScalerAndScaledData) {
  const auto r = run({"scale", "--data", kCleveland, "--out", path("scaled")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto scaler = Scaler::load(path("scaled/scaler.json"));
  EXPECT_EQ(scaler.columns()[0].min, 29.0);
  EXPECT_EQ(scaler.columns()[0].max, 77.0);
  EXPECT_EQ(count_lines(oracle::read_file(dir_ / "scaled" / "scaled.csv")), 304u);
  EXPECT_NE(r.out.find("rows: 303"), std::string::npos);
}

TEST_F(CliTest, BenchmarkSingleWorker) {
  const auto r = run({"benchmark", "--width", "16", "--workers-list", "1", "--repetitions", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("1.00"), std::string::npos);
  EXPECT_NE(r.out.find("outputs identical across worker counts: yes"), std::string::npos);
}

TEST_F(CliTest, BenchmarkSeveralWorkers) {
  const auto r = run({"benchmark", "--width", "256", "--workers-list", "1,2,4", "--repetitions", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("outputs identical across worker counts: yes"), std::string::npos);
  EXPECT_EQ(run({"benchmark", "--width", "0"}).code, cli::kUsage);
  EXPECT_EQ(run({"benchmark", "--workers-list", "1,x"}).code, cli::kUsage);
}
