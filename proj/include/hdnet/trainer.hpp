#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hdnet/csv.hpp"
#include "hdnet/data.hpp"
#include "hdnet/errors.hpp"
#include "hdnet/network.hpp"
#include "hdnet/parallel.hpp"
#include "hdnet/rng.hpp"
#include "hdnet/scaler.hpp"

namespace hdnet {

enum class UpdateMode { per_sample, batch };

struct TrainConfig {
  double initial_lr = 0.1;
  double momentum = 0.9;
  double lr_increase = 1.05;
  double lr_decrease = 0.7;
  double max_sse_rise = 0.04;  // tolerated relative SSE increase before an epoch is rejected
  std::size_t max_epochs = 5000;
  double target_sse = 0.01;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  UpdateMode update_mode = UpdateMode::per_sample;

  void validate() const {
    auto fail = [](const std::string& what) { throw ValidationError("train config: " + what); };
    if (!(initial_lr > 0.0) || !std::isfinite(initial_lr)) fail("initial_lr must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must be in [0, 1)");
    if (!(lr_increase > 1.0) || !std::isfinite(lr_increase)) fail("lr_increase must be > 1");
    if (!(lr_decrease > 0.0 && lr_decrease < 1.0)) fail("lr_decrease must be in (0, 1)");
    if (!(max_sse_rise >= 0.0) || !std::isfinite(max_sse_rise)) fail("max_sse_rise must be >= 0");
    if (!(target_sse >= 0.0)) fail("target_sse must be >= 0");
    if (max_epochs == 0) fail("max_epochs must be >= 1");
    if (workers == 0) fail("workers must be >= 1");
  }
};

// One training or test example, already scaled and class-encoded.
struct Sample {
  std::vector<double> input;
  std::vector<double> target;
  int label = -1;
};

inline std::vector<Sample> prepare_samples(const Dataset& ds, const Scaler& scaler) {
  std::vector<Sample> out;
  out.reserve(ds.size());
  for (const auto& row : ds.rows) {
    const auto code = encode_class(row.label);
    out.push_back({scaler.scale(row.features).values, {code.begin(), code.end()}, row.label});
  }
  return out;
}

// Previous update step for every weight and bias.
struct Velocity {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  static Velocity zeros_like(const Network& net) {
    Velocity v;
    for (const auto& l : net.layers()) {
      v.weights.emplace_back(l.weights.size(), 0.0);
      v.biases.emplace_back(l.biases.size(), 0.0);
    }
    return v;
  }

  friend bool operator==(const Velocity&, const Velocity&) = default;
};

// step = -lr * gradient + momentum * previous_step, added to each parameter.
inline void apply_update(Network& net, const Gradients& grads, Velocity& velocity, double lr, double momentum) {
  auto& layers = net.layers();
  if (grads.layers.size() != layers.size() || velocity.weights.size() != layers.size() ||
      velocity.biases.size() != layers.size()) {
    throw ShapeError("apply_update: layer count mismatch");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& layer = layers[l];
    const auto& g = grads.layers[l];
    auto& vw = velocity.weights[l];
    auto& vb = velocity.biases[l];
    if (g.weights.size() != layer.weights.size() || g.biases.size() != layer.biases.size() ||
        vw.size() != layer.weights.size() || vb.size() != layer.biases.size()) {
      throw ShapeError("apply_update: layer " + std::to_string(l + 1) + " shape mismatch");
    }
    for (std::size_t k = 0; k < layer.weights.size(); ++k) {
      const double step = -lr * g.weights[k] + momentum * vw[k];
      layer.weights[k] += step;
      vw[k] = step;
    }
    for (std::size_t k = 0; k < layer.biases.size(); ++k) {
      const double step = -lr * g.biases[k] + momentum * vb[k];
      layer.biases[k] += step;
      vb[k] = step;
    }
  }
}

struct LearningRateDecision {
  double lr;
  bool accept;
};

// Raise the rate after an improvement, hold it inside the tolerance band,
// lower it and reject the epoch when the SSE rose by more than max_sse_rise.
inline LearningRateDecision adapt_learning_rate(double prev_sse, double new_sse, double lr, const TrainConfig& config) {
  if (new_sse <= prev_sse) return {lr * config.lr_increase, true};
  if (new_sse > prev_sse * (1.0 + config.max_sse_rise)) return {lr * config.lr_decrease, false};
  return {lr, true};
}

// Sample order for a per-sample epoch; a function of (seed, epoch) only.
inline std::vector<std::size_t> presentation_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  auto rng = make_rng(seed, 0xe90c0000u + epoch);
  return shuffled_indices(n, rng);
}

// Runs one pass over `samples` and returns the summed per-sample SSE. In
// per_sample mode each sample's SSE is taken before its own update.
inline double train_epoch(Network& net, std::span<const Sample> samples, Velocity& velocity, double lr,
                          const TrainConfig& config, std::size_t epoch, WorkerPool& pool) {
  if (samples.empty()) throw ValidationError("training set is empty");

  if (config.update_mode == UpdateMode::per_sample) {
    double total = 0.0;
    for (std::size_t idx : presentation_order(samples.size(), config.seed, epoch)) {
      const auto& s = samples[idx];
      const auto acts = forward(net, s.input, pool);
      total += sse(acts.output(), s.target);
      apply_update(net, backward(net, acts, s.target, pool), velocity, lr, config.momentum);
    }
    return total;
  }

  // Batch: per-sample work may run concurrently; the sum is taken in index order.
  std::vector<Gradients> per_sample(samples.size());
  std::vector<double> errors(samples.size());
  const std::size_t cost = net.parameter_count() * 3;
  pool.parallel_for(samples.size(), cost, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const auto acts = forward(net, samples[k].input, pool);
      errors[k] = sse(acts.output(), samples[k].target);
      per_sample[k] = backward(net, acts, samples[k].target, pool);
    }
  });
  Gradients total_grad = Gradients::zeros_like(net);
  double total = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    total += errors[k];
    for (std::size_t l = 0; l < total_grad.layers.size(); ++l) {
      auto& dst = total_grad.layers[l];
      const auto& src = per_sample[k].layers[l];
      for (std::size_t i = 0; i < dst.weights.size(); ++i) dst.weights[i] += src.weights[i];
      for (std::size_t i = 0; i < dst.biases.size(); ++i) dst.biases[i] += src.biases[i];
    }
  }
  apply_update(net, total_grad, velocity, lr, config.momentum);
  return total;
}

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double sse = 0.0;
  double learning_rate = 0.0;  // rate used during this epoch
  bool accepted = true;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;

  std::size_t size() const noexcept { return epochs.size(); }

  // SSE of the last accepted epoch.
  double final_sse() const {
    for (auto it = epochs.rbegin(); it != epochs.rend(); ++it) {
      if (it->accepted) return it->sse;
    }
    return 0.0;
  }

  friend bool operator==(const TrainingHistory&, const TrainingHistory&) = default;
};

// Epoch-by-epoch driver. Each step() runs one epoch, then compares its SSE
// with the last accepted epoch: the learning rate is adapted and a rejected
// epoch's weights and velocity are rolled back (the attempt is still
// recorded). The first epoch has nothing to compare against and is accepted
// at the initial rate. Training is done once an accepted epoch reaches
// target_sse or max_epochs epochs have been attempted.
class Trainer {
 public:
  Trainer(Network& net, std::span<const Sample> samples, const TrainConfig& config, WorkerPool& pool)
      : net_(net), samples_(samples), config_(config), pool_(pool), velocity_(Velocity::zeros_like(net)),
        lr_(config.initial_lr) {
    config_.validate();
    if (samples_.empty()) throw ValidationError("training set is empty");
  }

  bool done() const noexcept { return reached_target_ || history_.size() >= config_.max_epochs; }

  EpochRecord step() {
    const std::size_t epoch = history_.size() + 1;
    const Network saved_net = net_;
    const Velocity saved_velocity = velocity_;

    const double epoch_lr = lr_;
    const double epoch_sse = train_epoch(net_, samples_, velocity_, epoch_lr, config_, epoch, pool_);
    if (!std::isfinite(epoch_sse)) throw DivergenceError(epoch, epoch_sse);

    bool accept = true;
    if (last_accepted_) {
      const auto decision = adapt_learning_rate(*last_accepted_, epoch_sse, lr_, config_);
      lr_ = decision.lr;
      accept = decision.accept;
    }
    history_.epochs.push_back({epoch, epoch_sse, epoch_lr, accept});

    if (accept) {
      last_accepted_ = epoch_sse;
      reached_target_ = epoch_sse <= config_.target_sse;
    } else {
      net_ = saved_net;
      velocity_ = saved_velocity;
    }
    return history_.epochs.back();
  }

  TrainingHistory run() {
    while (!done()) step();
    return history_;
  }

  const Network& network() const noexcept { return net_; }
  const Velocity& velocity() const noexcept { return velocity_; }
  double learning_rate() const noexcept { return lr_; }
  const TrainingHistory& history() const noexcept { return history_; }

 private:
  Network& net_;
  std::span<const Sample> samples_;
  TrainConfig config_;
  WorkerPool& pool_;
  Velocity velocity_;
  double lr_;
  std::optional<double> last_accepted_;
  bool reached_target_ = false;
  TrainingHistory history_;
};

inline TrainingHistory train(Network& net, std::span<const Sample> samples, const TrainConfig& config,
                             WorkerPool& pool) {
  return Trainer(net, samples, config, pool).run();
}

inline TrainingHistory train(Network& net, std::span<const Sample> samples, const TrainConfig& config) {
  if (config.workers <= 1) return train(net, samples, config, WorkerPool::serial());
  WorkerPool pool(config.workers);
  return train(net, samples, config, pool);
}

inline constexpr std::string_view kHistoryCsvHeader = "epoch,sse,learning_rate,accepted";

inline void write_history_csv(const TrainingHistory& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot write history");
  out << kHistoryCsvHeader << '\n';
  for (const auto& e : history.epochs) {
    out << e.epoch << ',' << format_double(e.sse) << ',' << format_double(e.learning_rate) << ','
        << (e.accepted ? 1 : 0) << '\n';
  }
  if (!out) throw IoError(path, "cannot write history");
}

inline TrainingHistory read_history_csv(const std::string& path) {
  TrainingHistory history;
  for (const auto& f : read_csv(path, kHistoryCsvHeader)) {
    if (f.size() != 4) throw FormatError(path + ": history rows need 4 fields");
    const auto epoch = detail::parse_number(f[0]);
    const auto err = detail::parse_number(f[1]);
    const auto lr = detail::parse_number(f[2]);
    if (!epoch || !err || !lr || (f[3] != "0" && f[3] != "1")) throw FormatError(path + ": malformed history row");
    history.epochs.push_back({static_cast<std::size_t>(*epoch), *err, *lr, f[3] == "1"});
  }
  return history;
}

}  // namespace hdnet
