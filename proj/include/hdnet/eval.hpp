#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hdnet/csv.hpp"
#include "hdnet/data.hpp"
#include "hdnet/errors.hpp"
#include "hdnet/network.hpp"
#include "hdnet/parallel.hpp"
#include "hdnet/scaler.hpp"
#include "hdnet/trainer.hpp"

namespace hdnet {

using ConfusionMatrix = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;  // [true][predicted]

struct Metrics {
  std::size_t n_test = 0;
  std::size_t n_correct = 0;
  double efficiency = 0.0;  // percent, exact 4-class match
  ConfusionMatrix confusion{};
  std::size_t n_binary_correct = 0;
  double binary_efficiency = 0.0;  // percent, class 0 vs classes 1..3

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : confusion) rows.push_back(r);
    return {{"n_test", n_test},
            {"n_correct", n_correct},
            {"efficiency_pct", efficiency},
            {"binary_correct", n_binary_correct},
            {"binary_efficiency_pct", binary_efficiency},
            {"confusion", std::move(rows)}};
  }
};

inline Metrics evaluate(const Network& net, std::span<const Sample> test, WorkerPool& pool) {
  if (test.empty()) throw ValidationError("test set is empty");
  Metrics m;
  m.n_test = test.size();
  for (const auto& s : test) {
    if (s.label < 0 || s.label >= kNumClasses) {
      throw ValidationError("test sample label " + std::to_string(s.label) + " outside 0..3");
    }
    const int predicted = predict(net, s.input, pool);
    ++m.confusion[static_cast<std::size_t>(s.label)][static_cast<std::size_t>(predicted)];
    if (predicted == s.label) ++m.n_correct;
    if ((predicted == 0) == (s.label == 0)) ++m.n_binary_correct;
  }
  m.efficiency = 100.0 * static_cast<double>(m.n_correct) / static_cast<double>(m.n_test);
  m.binary_efficiency = 100.0 * static_cast<double>(m.n_binary_correct) / static_cast<double>(m.n_test);
  return m;
}

inline Metrics evaluate(const Network& net, std::span<const Sample> test) {
  return evaluate(net, test, WorkerPool::serial());
}

inline std::string format_confusion(const ConfusionMatrix& c) {
  std::ostringstream os;
  os << "true\\pred" << std::setw(7) << 0 << std::setw(7) << 1 << std::setw(7) << 2 << std::setw(7) << 3 << '\n';
  for (std::size_t t = 0; t < c.size(); ++t) {
    os << std::setw(9) << t;
    for (std::size_t p = 0; p < c[t].size(); ++p) os << std::setw(7) << c[t][p];
    os << '\n';
  }
  return os.str();
}

struct SplitSize {
  std::size_t n_train = 0;
  std::size_t n_test = 0;

  friend bool operator==(const SplitSize&, const SplitSize&) = default;
};

struct Architecture {
  std::string name;
  std::vector<std::size_t> layer_sizes;
};

inline std::vector<SplitSize> default_splits() { return {{100, 300}, {150, 200}, {250, 150}, {350, 100}}; }

inline std::vector<Architecture> default_architectures() {
  return {{"single", {kNumAttributes, 2}}, {"multi", {kNumAttributes, 8, 2}}};
}

// Requested sizes if they fit in `available` rows, otherwise both scaled
// down by available / (n_train + n_test), floor-rounded.
inline SplitSize fit_split(SplitSize requested, std::size_t available) {
  const std::size_t total = requested.n_train + requested.n_test;
  if (total <= available) return requested;
  return {requested.n_train * available / total, requested.n_test * available / total};
}

struct ExperimentCell {
  SplitSize requested;
  SplitSize actual;
  std::string architecture;
  std::vector<std::size_t> layer_sizes;
  Metrics metrics;
  double baseline_efficiency = 0.0;  // majority class of the training split, scored on the test split
  double final_sse = 0.0;
  std::size_t epochs = 0;

  bool rescaled() const noexcept { return !(requested == actual); }
};

struct ExperimentReport {
  std::vector<ExperimentCell> cells;
  std::size_t instance_count = 0;
  std::string imputation;
  std::uint64_t seed = 0;
};

inline double majority_baseline(const Dataset& train, const Dataset& test) {
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& r : train.rows) ++counts[static_cast<std::size_t>(r.label)];
  const auto majority = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  const auto hits = std::count_if(test.rows.begin(), test.rows.end(), [&](const Row& r) { return r.label == majority; });
  return test.empty() ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(test.size());
}

// Each (split, architecture) cell splits with config.seed, fits a scaler on
// its training rows, trains a fresh network seeded with config.seed and
// evaluates on the held-out rows. Cells run concurrently on `pool`; each
// trains single-threaded, so results do not depend on the worker count.
inline ExperimentReport run_experiment(const Dataset& dataset, const std::vector<SplitSize>& splits,
                                       const std::vector<Architecture>& architectures, const TrainConfig& config,
                                       WorkerPool& pool, std::string imputation_label = "median_mode") {
  config.validate();
  ExperimentReport report;
  report.instance_count = dataset.size();
  report.imputation = std::move(imputation_label);
  report.seed = config.seed;

  for (const auto& s : splits) {
    for (const auto& a : architectures) {
      ExperimentCell cell;
      cell.requested = s;
      cell.actual = fit_split(s, dataset.size());
      cell.architecture = a.name;
      cell.layer_sizes = a.layer_sizes;
      report.cells.push_back(std::move(cell));
    }
  }

  pool.parallel_for(report.cells.size(), std::size_t{1} << 30, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      auto& cell = report.cells[k];
      const auto parts = split(dataset, cell.actual.n_train, cell.actual.n_test, config.seed);
      const auto scaler = fit_scaler(parts.train);
      const auto train_samples = prepare_samples(parts.train, scaler);
      const auto test_samples = prepare_samples(parts.test, scaler);

      auto net = new_network(cell.layer_sizes, config.seed);
      const auto history = train(net, train_samples, config, WorkerPool::serial());
      cell.metrics = evaluate(net, test_samples);
      cell.baseline_efficiency = majority_baseline(parts.train, parts.test);
      cell.final_sse = history.final_sse();
      cell.epochs = history.size();
    }
  });
  return report;
}

inline constexpr std::string_view kReportCsvHeader = "n_train,n_test,architecture,efficiency_pct,final_sse,epochs";

struct ReportRow {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::string architecture;
  double efficiency_pct = 0.0;
  double final_sse = 0.0;
  std::size_t epochs = 0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

inline std::vector<ReportRow> report_rows(const ExperimentReport& report) {
  std::vector<ReportRow> rows;
  for (const auto& c : report.cells) {
    rows.push_back({c.actual.n_train, c.actual.n_test, c.architecture, c.metrics.efficiency, c.final_sse, c.epochs});
  }
  return rows;
}

// One row per cell with the sizes actually used.
inline void export_report(const ExperimentReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot write report");
  out << kReportCsvHeader << '\n';
  for (const auto& r : report_rows(report)) {
    out << r.n_train << ',' << r.n_test << ',' << r.architecture << ',' << format_double(r.efficiency_pct) << ','
        << format_double(r.final_sse) << ',' << r.epochs << '\n';
  }
  if (!out) throw IoError(path, "cannot write report");
}

inline std::vector<ReportRow> read_report_csv(const std::string& path) {
  std::vector<ReportRow> rows;
  for (const auto& f : read_csv(path, kReportCsvHeader)) {
    if (f.size() != 6) throw FormatError(path + ": report rows need 6 fields");
    const auto n_train = detail::parse_number(f[0]);
    const auto n_test = detail::parse_number(f[1]);
    const auto eff = detail::parse_number(f[3]);
    const auto err = detail::parse_number(f[4]);
    const auto epochs = detail::parse_number(f[5]);
    if (!n_train || !n_test || !eff || !err || !epochs) throw FormatError(path + ": malformed report row");
    rows.push_back({static_cast<std::size_t>(*n_train), static_cast<std::size_t>(*n_test), f[2], *eff, *err,
                    static_cast<std::size_t>(*epochs)});
  }
  return rows;
}

// Provenance, requested vs actual sizes and confusion matrices.
inline nlohmann::json report_to_json(const ExperimentReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"requested", {{"n_train", c.requested.n_train}, {"n_test", c.requested.n_test}}},
                     {"actual", {{"n_train", c.actual.n_train}, {"n_test", c.actual.n_test}}},
                     {"rescaled", c.rescaled()},
                     {"architecture", c.architecture},
                     {"layer_sizes", c.layer_sizes},
                     {"metrics", c.metrics.to_json()},
                     {"baseline_efficiency_pct", c.baseline_efficiency},
                     {"final_sse", c.final_sse},
                     {"epochs", c.epochs}});
  }
  return {{"instance_count", report.instance_count},
          {"imputation", report.imputation},
          {"seed", report.seed},
          {"cells", std::move(cells)}};
}

inline std::string format_report_table(const ExperimentReport& report, bool binary = false) {
  std::ostringstream os;
  os << "instances: " << report.instance_count << "  imputation: " << report.imputation << "  seed: " << report.seed
     << '\n';
  os << std::left << std::setw(18) << "requested" << std::setw(14) << "actual" << std::setw(8) << "arch"
     << std::right << std::setw(10) << "eff%" << std::setw(10) << "base%";
  if (binary) os << std::setw(10) << "bin%";
  os << std::setw(12) << "final_sse" << std::setw(8) << "epochs" << '\n';
  for (const auto& c : report.cells) {
    const std::string req = std::to_string(c.requested.n_train) + "/" + std::to_string(c.requested.n_test);
    const std::string act = std::to_string(c.actual.n_train) + "/" + std::to_string(c.actual.n_test) +
                            (c.rescaled() ? "*" : "");
    os << std::left << std::setw(18) << req << std::setw(14) << act << std::setw(8) << c.architecture << std::right
       << std::fixed << std::setprecision(2) << std::setw(10) << c.metrics.efficiency << std::setw(10)
       << c.baseline_efficiency;
    if (binary) os << std::setw(10) << c.metrics.binary_efficiency;
    os << std::setprecision(4) << std::setw(12) << c.final_sse << std::setw(8) << c.epochs << '\n';
    os.unsetf(std::ios::fixed);
  }
  bool any_rescaled = false;
  for (const auto& c : report.cells) any_rescaled = any_rescaled || c.rescaled();
  if (any_rescaled) os << "* requested sizes exceed the instance count; scaled down keeping the train:test ratio\n";
  return os.str();
}

}  // namespace hdnet
