#pragma once

// Command-line front end: scale, train, evaluate, experiment, benchmark.
// run() is kept separate from main() so tests can drive it in-process.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hdnet/hdnet.hpp"

namespace hdnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kDataError = 3,
  kDiverged = 4,
  kIoError = 5,
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Effective settings of one run. Serialized as a flat JSON object; the same
// keys are accepted by --config.
struct RunConfig {
  std::string data_path;
  std::string impute = "median";  // drop | median
  std::string labels = "clamp";   // strict | clamp
  std::vector<std::size_t> layers{kNumAttributes, 8, 2};
  std::size_t max_layers = 5;
  TrainConfig train;
  std::string out_dir = "out";
  std::vector<SplitSize> splits = default_splits();
  std::vector<std::string> architectures{"single", "multi"};
  bool binary = false;

  RunConfig() { train.workers = default_worker_count(); }

  ImputePolicy impute_policy() const { return impute == "drop" ? ImputePolicy::drop_rows : ImputePolicy::median_mode; }
  LabelPolicy label_policy() const { return labels == "strict" ? LabelPolicy::strict : LabelPolicy::clamp; }

  json to_json() const {
    json splits_json = json::array();
    for (const auto& s : splits) splits_json.push_back({s.n_train, s.n_test});
    return {{"data_path", data_path},
            {"impute", impute},
            {"labels", labels},
            {"layers", layers},
            {"max_layers", max_layers},
            {"initial_lr", train.initial_lr},
            {"momentum", train.momentum},
            {"lr_increase", train.lr_increase},
            {"lr_decrease", train.lr_decrease},
            {"max_sse_rise", train.max_sse_rise},
            {"max_epochs", train.max_epochs},
            {"target_sse", train.target_sse},
            {"seed", train.seed},
            {"workers", train.workers},
            {"update_mode", train.update_mode == UpdateMode::batch ? "batch" : "per_sample"},
            {"out_dir", out_dir},
            {"splits", std::move(splits_json)},
            {"architectures", architectures},
            {"binary", binary}};
  }

  // Overlays the keys present in `j`; unknown keys are rejected.
  void merge_json(const json& j) {
    if (!j.is_object()) throw UsageError("config must be a JSON object");
    static const std::set<std::string> known = {
        "data_path",  "impute",     "labels",       "layers",     "max_layers", "initial_lr",  "momentum",
        "lr_increase", "lr_decrease", "max_sse_rise", "max_epochs", "target_sse", "seed",        "workers",
        "update_mode", "out_dir",    "splits",       "architectures", "binary"};
    for (const auto& [key, _] : j.items()) {
      if (!known.contains(key)) throw UsageError("unknown config key '" + key + "'");
    }
    try {
      if (j.contains("data_path")) data_path = j["data_path"].get<std::string>();
      if (j.contains("impute")) impute = j["impute"].get<std::string>();
      if (j.contains("labels")) labels = j["labels"].get<std::string>();
      if (j.contains("layers")) layers = j["layers"].get<std::vector<std::size_t>>();
      if (j.contains("max_layers")) max_layers = j["max_layers"].get<std::size_t>();
      if (j.contains("initial_lr")) train.initial_lr = j["initial_lr"].get<double>();
      if (j.contains("momentum")) train.momentum = j["momentum"].get<double>();
      if (j.contains("lr_increase")) train.lr_increase = j["lr_increase"].get<double>();
      if (j.contains("lr_decrease")) train.lr_decrease = j["lr_decrease"].get<double>();
      if (j.contains("max_sse_rise")) train.max_sse_rise = j["max_sse_rise"].get<double>();
      if (j.contains("max_epochs")) train.max_epochs = j["max_epochs"].get<std::size_t>();
      if (j.contains("target_sse")) train.target_sse = j["target_sse"].get<double>();
      if (j.contains("seed")) train.seed = j["seed"].get<std::uint64_t>();
      if (j.contains("workers")) train.workers = j["workers"].get<std::size_t>();
      if (j.contains("update_mode")) {
        const auto mode = j["update_mode"].get<std::string>();
        if (mode != "per_sample" && mode != "batch") throw UsageError("update_mode must be per_sample or batch");
        train.update_mode = mode == "batch" ? UpdateMode::batch : UpdateMode::per_sample;
      }
      if (j.contains("out_dir")) out_dir = j["out_dir"].get<std::string>();
      if (j.contains("splits")) {
        splits.clear();
        for (const auto& s : j["splits"]) {
          const auto pair = s.get<std::vector<std::size_t>>();
          if (pair.size() != 2) throw UsageError("each split must be [n_train, n_test]");
          splits.push_back({pair[0], pair[1]});
        }
      }
      if (j.contains("architectures")) architectures = j["architectures"].get<std::vector<std::string>>();
      if (j.contains("binary")) binary = j["binary"].get<bool>();
    } catch (const json::exception& e) {
      throw UsageError(std::string("config: ") + e.what());
    }
  }

  void validate() const {
    if (impute != "drop" && impute != "median") throw UsageError("impute must be drop or median");
    if (labels != "strict" && labels != "clamp") throw UsageError("labels must be strict or clamp");
    if (layers.size() < 2 || layers.front() != kNumAttributes || layers.back() != 2) {
      throw UsageError("layers must start with 13 inputs and end with 2 outputs");
    }
    if (layers.size() > max_layers) {
      throw UsageError(std::to_string(layers.size()) + " layers exceeds max_layers " + std::to_string(max_layers));
    }
    if (std::find(layers.begin(), layers.end(), std::size_t{0}) != layers.end()) {
      throw UsageError("layer sizes must be positive");
    }
    for (const auto& a : architectures) {
      if (a != "single" && a != "multi") throw UsageError("unknown architecture '" + a + "'");
    }
    try {
      train.validate();
    } catch (const ValidationError& e) {
      throw UsageError(e.what());
    }
  }

  std::vector<Architecture> architecture_list() const {
    std::vector<Architecture> out;
    for (const auto& a : architectures) {
      out.push_back(a == "single" ? Architecture{"single", {kNumAttributes, 2}} : Architecture{"multi", layers});
    }
    return out;
  }
};

namespace detail {

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open config");
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
}

inline std::vector<std::size_t> parse_size_list(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  for (auto f : hdnet::detail::split_fields(text)) {
    const auto v = hdnet::detail::parse_number(f);
    if (!v || *v < 0 || *v != static_cast<double>(static_cast<std::size_t>(*v))) {
      throw UsageError(std::string(what) + ": not a non-negative integer list: '" + text + "'");
    }
    out.push_back(static_cast<std::size_t>(*v));
  }
  return out;
}

inline fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError(dir, "cannot create output directory");
  return fs::path(dir);
}

inline void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string(what) + " path is required");
  if (!fs::is_regular_file(path)) throw IoError(path, std::string(what) + " not found");
}

inline void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot write");
  out << j.dump(2) << '\n';
  if (!out) throw IoError(path.string(), "cannot write");
}

inline Dataset load_and_impute(const RunConfig& cfg, std::ostream& err) {
  auto ds = impute(load_dataset(cfg.data_path, cfg.label_policy()), cfg.impute_policy());
  if (!ds.warnings.empty()) {
    err << "warning: " << ds.warnings.size() << " class label(s) clamped to 3 (first: " << ds.warnings.front()
        << ")\n";
  }
  if (ds.empty()) throw ValidationError("no usable rows in " + cfg.data_path);
  return ds;
}

}  // namespace detail

// Options shared by every subcommand; optionals stay empty unless given.
struct CommonFlags {
  std::string config_path;
  std::optional<std::string> data;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> layers;
  std::optional<std::string> impute;
  std::optional<std::string> labels;
  std::optional<std::size_t> max_epochs;
  bool binary = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file (flat keys; flags override it)");
    cmd->add_option("--data", data, "comma-separated heart-disease data file");
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--workers", workers, "worker threads");
    cmd->add_option("--layers", layers, "layer sizes, e.g. 13,8,2");
    cmd->add_option("--impute", impute, "missing values: drop | median")->check(CLI::IsMember({"drop", "median"}));
    cmd->add_option("--labels", labels, "labels above 3: strict | clamp")->check(CLI::IsMember({"strict", "clamp"}));
    cmd->add_option("--max-epochs", max_epochs, "epoch limit");
    cmd->add_flag("--binary", binary, "also report normal-vs-abnormal efficiency");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) cfg.merge_json(detail::read_json_file(config_path));
    if (data) cfg.data_path = *data;
    if (out) cfg.out_dir = *out;
    if (seed) cfg.train.seed = *seed;
    if (workers) cfg.train.workers = *workers;
    if (layers) cfg.layers = detail::parse_size_list(*layers, "--layers");
    if (impute) cfg.impute = *impute;
    if (labels) cfg.labels = *labels;
    if (max_epochs) cfg.train.max_epochs = *max_epochs;
    if (binary) cfg.binary = true;
    cfg.validate();
    return cfg;
  }
};

inline int cmd_scale(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  detail::require_file(cfg.data_path, "data file");
  const auto dir = detail::prepare_out_dir(cfg.out_dir);
  const auto ds = detail::load_and_impute(cfg, err);
  const auto scaler = fit_scaler(ds);

  scaler.save((dir / "scaler.json").string());
  {
    const auto path = dir / "scaled.csv";
    std::ofstream csv(path);
    if (!csv) throw IoError(path.string(), "cannot write");
    for (const auto& attr : heart_schema()) csv << attr.name << ',';
    csv << "class\n";
    for (const auto& row : ds.rows) {
      for (double v : scaler.scale(row.features).values) csv << format_double(v) << ',';
      csv << row.label << '\n';
    }
    if (!csv) throw IoError(path.string(), "cannot write");
  }
  detail::write_json(dir / "config.json", cfg.to_json());

  out << "rows: " << ds.size() << "\n";
  out << std::left << std::setw(10) << "column" << std::right << std::setw(10) << "min" << std::setw(10) << "max"
      << std::setw(10) << "delta" << "\n";
  for (const auto& c : scaler.columns()) {
    out << std::left << std::setw(10) << c.name << std::right << std::setw(10) << c.min << std::setw(10) << c.max
        << std::setw(10) << c.delta() << (c.degenerate() ? "  degenerate" : "") << "\n";
  }
  return kOk;
}

inline int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  detail::require_file(cfg.data_path, "data file");
  const auto dir = detail::prepare_out_dir(cfg.out_dir);
  const auto ds = detail::load_and_impute(cfg, err);
  const auto scaler = fit_scaler(ds);
  const auto samples = prepare_samples(ds, scaler);

  auto net = new_network(cfg.layers, cfg.train.seed, NetworkOptions{cfg.max_layers});
  const auto history = train(net, samples, cfg.train);

  net.save((dir / "model.json").string());
  scaler.save((dir / "scaler.json").string());
  write_history_csv(history, (dir / "history.csv").string());
  detail::write_json(dir / "config.json", cfg.to_json());

  out << "rows: " << ds.size() << "\n";
  out << "epochs: " << history.size() << "\n";
  out << "final sse: " << format_double(history.final_sse()) << "\n";
  return kOk;
}

struct EvaluateFlags {
  std::string model_path;
  std::string scaler_path;
};

inline int cmd_evaluate(const RunConfig& cfg, const EvaluateFlags& flags, bool write_json, std::ostream& out,
                        std::ostream& err) {
  detail::require_file(flags.model_path, "model");
  detail::require_file(flags.scaler_path, "scaler");
  detail::require_file(cfg.data_path, "data file");
  const auto net = Network::load(flags.model_path, NetworkOptions{std::max<std::size_t>(cfg.max_layers, 2)});
  const auto scaler = Scaler::load(flags.scaler_path);
  if (net.input_size() != kNumAttributes || net.output_size() != 2) {
    throw FormatError("model must map 13 inputs to 2 outputs");
  }
  const auto ds = detail::load_and_impute(cfg, err);
  const auto samples = prepare_samples(ds, scaler);

  const auto m = evaluate(net, samples);
  out << "samples: " << m.n_test << "\n";
  out << "efficiency (4-class): " << std::fixed << std::setprecision(2) << m.efficiency << "% (" << m.n_correct << "/"
      << m.n_test << ")\n";
  if (cfg.binary) {
    out << "efficiency (normal vs abnormal): " << m.binary_efficiency << "% (" << m.n_binary_correct << "/"
        << m.n_test << ")\n";
  }
  out.unsetf(std::ios::fixed);
  out << format_confusion(m.confusion);

  if (write_json) {
    const auto dir = detail::prepare_out_dir(cfg.out_dir);
    detail::write_json(dir / "metrics.json", m.to_json());
  }
  return kOk;
}

inline int cmd_experiment(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  detail::require_file(cfg.data_path, "data file");
  const auto dir = detail::prepare_out_dir(cfg.out_dir);
  const auto ds = detail::load_and_impute(cfg, err);

  WorkerPool pool(cfg.train.workers);
  const auto report = run_experiment(ds, cfg.splits, cfg.architecture_list(), cfg.train, pool,
                                     cfg.impute == "drop" ? "drop_rows" : "median_mode");
  export_report(report, (dir / "report.csv").string());
  detail::write_json(dir / "report.json", report_to_json(report));
  detail::write_json(dir / "config.json", cfg.to_json());
  out << format_report_table(report, cfg.binary);
  return kOk;
}

struct BenchmarkFlags {
  std::size_t width = 1024;
  std::string workers_list = "1,2,4,8";
  std::size_t repetitions = 5;
  std::uint64_t seed = 1;
};

// Times one forward + backward pass through [64, width, width, 4] per worker
// count and checks that every worker count yields identical results.
inline int cmd_benchmark(const BenchmarkFlags& flags, std::ostream& out) {
  if (flags.width == 0) throw UsageError("--width must be >= 1");
  if (flags.repetitions == 0) throw UsageError("--repetitions must be >= 1");
  auto workers = detail::parse_size_list(flags.workers_list, "--workers-list");
  if (workers.empty() || std::find(workers.begin(), workers.end(), std::size_t{0}) != workers.end()) {
    throw UsageError("--workers-list needs positive worker counts");
  }
  if (std::find(workers.begin(), workers.end(), std::size_t{1}) == workers.end()) workers.insert(workers.begin(), 1);

  const auto net = new_network({64, flags.width, flags.width, 4}, flags.seed);
  auto rng = make_rng(flags.seed, 0xbe7c);
  std::vector<double> input(64);
  for (double& x : input) x = uniform_unit(rng);
  const std::vector<double> target{0.0, 1.0, 1.0, 0.0};

  struct Result {
    std::size_t workers;
    double median_ms;
  };
  std::vector<Result> results;
  std::optional<Activations> ref_acts;
  std::optional<Gradients> ref_grads;
  bool identical = true;

  for (std::size_t w : workers) {
    WorkerPool pool(w);
    std::vector<double> times;
    for (std::size_t r = 0; r < flags.repetitions; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      auto acts = forward(net, input, pool);
      auto grads = backward(net, acts, target, pool);
      const auto t1 = std::chrono::steady_clock::now();
      times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      if (!ref_acts) {
        ref_acts = std::move(acts);
        ref_grads = std::move(grads);
      } else if (!(acts == *ref_acts) || !(grads == *ref_grads)) {
        identical = false;
      }
    }
    std::sort(times.begin(), times.end());
    results.push_back({w, times[times.size() / 2]});
  }

  const double base = results.front().median_ms;
  out << "network: [64, " << flags.width << ", " << flags.width << ", 4]  repetitions: " << flags.repetitions
      << "  hardware threads: " << default_worker_count() << "\n";
  out << std::setw(8) << "workers" << std::setw(14) << "median_ms" << std::setw(10) << "speedup" << "\n";
  for (const auto& r : results) {
    out << std::setw(8) << r.workers << std::setw(14) << std::fixed << std::setprecision(3) << r.median_ms
        << std::setw(10) << std::setprecision(2) << base / r.median_ms << "\n";
  }
  out.unsetf(std::ios::fixed);
  out << "outputs identical across worker counts: " << (identical ? "yes" : "NO") << "\n";
  return identical ? kOk : kInternal;
}

// Entry point shared by the executable and the tests. args excludes argv[0].
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Feed-forward neural network classifier for the Cleveland heart-disease data", "hdnet"};
  app.require_subcommand(1);

  CommonFlags scale_flags, train_flags, eval_flags, exp_flags;
  auto* scale = app.add_subcommand("scale", "fit the min-max scaler and write scaled data");
  scale_flags.attach(scale);
  auto* train_cmd = app.add_subcommand("train", "train a network on a data file");
  train_flags.attach(train_cmd);
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score a saved model on a data file");
  eval_flags.attach(evaluate_cmd);
  EvaluateFlags eval_paths;
  evaluate_cmd->add_option("--model", eval_paths.model_path, "model JSON")->required();
  evaluate_cmd->add_option("--scaler", eval_paths.scaler_path, "scaler JSON")->required();
  auto* experiment = app.add_subcommand("experiment", "single vs multi layer over a grid of split sizes");
  exp_flags.attach(experiment);
  auto* benchmark = app.add_subcommand("benchmark", "per-neuron parallel speedup on a wide network");
  BenchmarkFlags bench;
  benchmark->add_option("--width", bench.width, "hidden layer width");
  benchmark->add_option("--workers-list", bench.workers_list, "comma-separated worker counts");
  benchmark->add_option("--repetitions", bench.repetitions, "timed passes per worker count");
  benchmark->add_option("--seed", bench.seed, "random seed");

  std::vector<std::string> argv_store{"hdnet"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (scale->parsed()) return cmd_scale(scale_flags.resolve(), out, err);
    if (train_cmd->parsed()) return cmd_train(train_flags.resolve(), out, err);
    if (evaluate_cmd->parsed()) {
      const bool write_json = eval_flags.out.has_value();
      return cmd_evaluate(eval_flags.resolve(), eval_paths, write_json, out, err);
    }
    if (experiment->parsed()) return cmd_experiment(exp_flags.resolve(), out, err);
    if (benchmark->parsed()) return cmd_benchmark(bench, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kDataError;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kDataError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << "\n";
    return kDiverged;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}

}  // namespace hdnet::cli
