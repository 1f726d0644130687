#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hdnet/data.hpp"
#include "hdnet/errors.hpp"
#include "hdnet/parallel.hpp"
#include "hdnet/rng.hpp"

namespace hdnet {

enum class Activation { logistic };

inline constexpr int kModelFormatVersion = 1;
inline constexpr double kInitWeightRange = 0.5;

// Logistic function, evaluated so that exp() never overflows.
inline double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // outputs x inputs, row-major
  std::vector<double> biases;

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out) : inputs(in), outputs(out), weights(in * out, 0.0), biases(out, 0.0) {}

  double& weight(std::size_t neuron, std::size_t input) { return weights[neuron * inputs + input]; }
  double weight(std::size_t neuron, std::size_t input) const { return weights[neuron * inputs + input]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct NetworkOptions {
  std::size_t max_layers = 5;  // counting the input layer
};

// Fully connected feed-forward network with logistic units in every
// non-input layer. layer_sizes()[0] is the input width.
class Network {
 public:
  Network() = default;

  // All weights and biases zero.
  explicit Network(std::vector<std::size_t> layer_sizes, NetworkOptions options = {}, std::uint64_t seed = 0)
      : sizes_(std::move(layer_sizes)), seed_(seed) {
    validate_sizes(sizes_, options);
    for (std::size_t l = 1; l < sizes_.size(); ++l) layers_.emplace_back(sizes_[l - 1], sizes_[l]);
  }

  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
  std::size_t input_size() const noexcept { return sizes_.front(); }
  std::size_t output_size() const noexcept { return sizes_.back(); }
  Activation activation() const noexcept { return Activation::logistic; }
  std::uint64_t seed() const noexcept { return seed_; }

  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  std::size_t parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.biases.size();
    return n;
  }

  bool all_finite() const noexcept {
    for (const auto& l : layers_) {
      for (double w : l.weights) {
        if (!std::isfinite(w)) return false;
      }
      for (double b : l.biases) {
        if (!std::isfinite(b)) return false;
      }
    }
    return true;
  }

  friend bool operator==(const Network&, const Network&) = default;

  nlohmann::json to_json() const {
    nlohmann::json weights = nlohmann::json::array();
    nlohmann::json biases = nlohmann::json::array();
    for (const auto& l : layers_) {
      weights.push_back(l.weights);
      biases.push_back(l.biases);
    }
    return {{"format_version", kModelFormatVersion},
            {"layer_sizes", sizes_},
            {"activation", "logistic"},
            {"weights", std::move(weights)},
            {"biases", std::move(biases)},
            {"seed", seed_}};
  }

  static Network from_json(const nlohmann::json& j, NetworkOptions options = {}) {
    try {
      if (!j.is_object()) throw FormatError("model JSON must be an object");
      for (const char* key : {"format_version", "layer_sizes", "activation", "weights", "biases", "seed"}) {
        if (!j.contains(key)) throw FormatError(std::string("model JSON missing field ") + key);
      }
      const int version = j.at("format_version").get<int>();
      if (version != kModelFormatVersion) {
        throw FormatError("unsupported model format_version " + std::to_string(version) + " (expected " +
                          std::to_string(kModelFormatVersion) + ")");
      }
      if (j.at("activation") != "logistic") {
        throw FormatError("unsupported activation " + j.at("activation").dump());
      }
      Network net(j.at("layer_sizes").get<std::vector<std::size_t>>(), options, j.at("seed").get<std::uint64_t>());
      const auto& w = j.at("weights");
      const auto& b = j.at("biases");
      if (!w.is_array() || !b.is_array() || w.size() != net.layers_.size() || b.size() != net.layers_.size()) {
        throw FormatError("model JSON weights/biases do not match layer_sizes");
      }
      for (std::size_t l = 0; l < net.layers_.size(); ++l) {
        auto& layer = net.layers_[l];
        auto lw = w[l].get<std::vector<double>>();
        auto lb = b[l].get<std::vector<double>>();
        if (lw.size() != layer.weights.size() || lb.size() != layer.biases.size()) {
          throw FormatError("model JSON layer " + std::to_string(l + 1) + " has wrong parameter count");
        }
        layer.weights = std::move(lw);
        layer.biases = std::move(lb);
      }
      if (!net.all_finite()) throw FormatError("model JSON contains non-finite parameters");
      return net;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("model JSON: ") + e.what());
    } catch (const ShapeError& e) {
      throw FormatError(std::string("model JSON: ") + e.what());
    }
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError(path, "cannot write model");
    out << to_json().dump(2) << '\n';
    if (!out) throw IoError(path, "cannot write model");
  }

  static Network load(const std::string& path, NetworkOptions options = {}) {
    std::ifstream in(path);
    if (!in) throw IoError(path, "cannot open model");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("model JSON " + path + ": " + e.what());
    }
    return from_json(j, options);
  }

 private:
  static void validate_sizes(const std::vector<std::size_t>& sizes, const NetworkOptions& options) {
    if (sizes.size() < 2) throw ShapeError("a network needs at least an input and an output layer");
    if (sizes.size() > options.max_layers) {
      throw ShapeError(std::to_string(sizes.size()) + " layers exceeds the limit of " +
                       std::to_string(options.max_layers));
    }
    for (std::size_t s : sizes) {
      if (s == 0) throw ShapeError("layer sizes must be positive");
    }
  }

  std::vector<std::size_t> sizes_;
  std::vector<DenseLayer> layers_;
  std::uint64_t seed_ = 0;
};

// Weights and biases uniform in [-0.5, 0.5], drawn layer by layer in
// row-major order, biases after weights.
inline Network new_network(std::vector<std::size_t> layer_sizes, std::uint64_t seed, NetworkOptions options = {}) {
  Network net(std::move(layer_sizes), options, seed);
  auto rng = make_rng(seed, 0x1417u);
  for (auto& layer : net.layers()) {
    for (double& w : layer.weights) w = uniform_real(rng, -kInitWeightRange, kInitWeightRange);
    for (double& b : layer.biases) b = uniform_real(rng, -kInitWeightRange, kInitWeightRange);
  }
  return net;
}

// Outputs of every layer for one sample; layers[0] is the input itself.
struct Activations {
  std::vector<std::vector<double>> layers;

  const std::vector<double>& output() const { return layers.back(); }
  friend bool operator==(const Activations&, const Activations&) = default;
};

inline Activations forward(const Network& net, std::span<const double> input, WorkerPool& pool) {
  if (input.size() != net.input_size()) {
    throw ShapeError("input has " + std::to_string(input.size()) + " values, network expects " +
                     std::to_string(net.input_size()));
  }
  Activations acts;
  acts.layers.reserve(net.layers().size() + 1);
  acts.layers.emplace_back(input.begin(), input.end());
  for (const auto& layer : net.layers()) {
    const auto& prev = acts.layers.back();
    std::vector<double> out(layer.outputs);
    pool.parallel_for(layer.outputs, layer.inputs, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const double* w = layer.weights.data() + i * layer.inputs;
        double sum = layer.biases[i];
        for (std::size_t j = 0; j < layer.inputs; ++j) sum += w[j] * prev[j];
        out[i] = sigmoid(sum);
      }
    });
    acts.layers.push_back(std::move(out));
  }
  return acts;
}

inline Activations forward(const Network& net, std::span<const double> input) {
  return forward(net, input, WorkerPool::serial());
}

inline double sse(std::span<const double> output, std::span<const double> target) {
  if (output.size() != target.size()) {
    throw ShapeError("sse: output has " + std::to_string(output.size()) + " values, target has " +
                     std::to_string(target.size()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < output.size(); ++i) {
    const double d = target[i] - output[i];
    total += d * d;
  }
  return total;
}

struct LayerGradient {
  std::vector<double> weights;  // same layout as DenseLayer::weights
  std::vector<double> biases;
  std::vector<double> deltas;

  friend bool operator==(const LayerGradient&, const LayerGradient&) = default;
};

// Gradients of E = SSE / 2 with respect to every weight and bias.
struct Gradients {
  std::vector<LayerGradient> layers;

  static Gradients zeros_like(const Network& net) {
    Gradients g;
    for (const auto& l : net.layers()) {
      g.layers.push_back({std::vector<double>(l.weights.size(), 0.0), std::vector<double>(l.biases.size(), 0.0),
                          std::vector<double>(l.outputs, 0.0)});
    }
    return g;
  }

  friend bool operator==(const Gradients&, const Gradients&) = default;
};

inline Gradients backward(const Network& net, const Activations& acts, std::span<const double> target,
                          WorkerPool& pool) {
  const auto& layers = net.layers();
  if (acts.layers.size() != layers.size() + 1) {
    throw ShapeError("activations have " + std::to_string(acts.layers.size()) + " layers, network has " +
                     std::to_string(layers.size() + 1));
  }
  for (std::size_t l = 0; l < acts.layers.size(); ++l) {
    if (acts.layers[l].size() != net.layer_sizes()[l]) {
      throw ShapeError("activation layer " + std::to_string(l) + " has wrong width");
    }
  }
  if (target.size() != net.output_size()) {
    throw ShapeError("target has " + std::to_string(target.size()) + " values, network outputs " +
                     std::to_string(net.output_size()));
  }

  Gradients grads = Gradients::zeros_like(net);

  {
    const auto& out = acts.output();
    auto& deltas = grads.layers.back().deltas;
    for (std::size_t i = 0; i < out.size(); ++i) deltas[i] = (out[i] - target[i]) * out[i] * (1.0 - out[i]);
  }

  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    const auto& prev = acts.layers[l];
    auto& g = grads.layers[l];

    pool.parallel_for(layer.outputs, layer.inputs, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        double* gw = g.weights.data() + i * layer.inputs;
        for (std::size_t j = 0; j < layer.inputs; ++j) gw[j] = g.deltas[i] * prev[j];
        g.biases[i] = g.deltas[i];
      }
    });

    if (l == 0) break;
    auto& below = grads.layers[l - 1].deltas;
    pool.parallel_for(layer.inputs, layer.outputs, [&](std::size_t begin, std::size_t end) {
      for (std::size_t j = begin; j < end; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < layer.outputs; ++i) sum += layer.weight(i, j) * g.deltas[i];
        below[j] = sum * prev[j] * (1.0 - prev[j]);
      }
    });
  }
  return grads;
}

inline Gradients backward(const Network& net, const Activations& acts, std::span<const double> target) {
  return backward(net, acts, target, WorkerPool::serial());
}

inline int predict(const Network& net, std::span<const double> input, WorkerPool& pool) {
  return decode_output(forward(net, input, pool).output());
}

inline int predict(const Network& net, std::span<const double> input) {
  return predict(net, input, WorkerPool::serial());
}

}  // namespace hdnet
