#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ehfl/rng.hpp"

namespace ehfl {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

struct Minibatch {
  Matrix inputs;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
};

/// Activation sums of one designated layer, accumulated over a batch.
struct FeatureVector {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  bool operator==(const FeatureVector&) const = default;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fully connected ReLU network with a linear output layer.
///
/// Flat parameter order (portable across implementations): for each layer
/// l = 1..L in order, the weight matrix of shape fan_out x fan_in stored
/// row-major (output unit major), immediately followed by the fan_out biases.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(std::vector<std::size_t> layer_sizes);

  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
  std::size_t num_layers() const noexcept { return sizes_.empty() ? 0 : sizes_.size() - 1; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  /// d_w = sum over layers of (fan_in + 1) * fan_out.
  std::size_t size() const noexcept { return flat_.size(); }

  std::span<double> flat() noexcept { return flat_; }
  std::span<const double> flat() const noexcept { return flat_; }

  // Layers are numbered 1..L; layer l maps sizes[l-1] -> sizes[l].
  std::size_t weight_offset(std::size_t layer) const { return offsets_.at(layer - 1); }
  std::size_t bias_offset(std::size_t layer) const {
    return weight_offset(layer) + sizes_[layer] * sizes_[layer - 1];
  }
  double& weight(std::size_t layer, std::size_t out, std::size_t in) {
    return flat_[weight_offset(layer) + out * sizes_[layer - 1] + in];
  }
  double weight(std::size_t layer, std::size_t out, std::size_t in) const {
    return flat_[weight_offset(layer) + out * sizes_[layer - 1] + in];
  }
  double& bias(std::size_t layer, std::size_t out) { return flat_[bias_offset(layer) + out]; }
  double bias(std::size_t layer, std::size_t out) const { return flat_[bias_offset(layer) + out]; }

  /// Width of layer `layer` (0 = input).
  std::size_t width(std::size_t layer) const { return sizes_.at(layer); }

  bool same_shape(const ModelParams& other) const noexcept { return sizes_ == other.sizes_; }

  ModelParams& scale(double factor) noexcept;
  /// this += factor * other
  ModelParams& add_scaled(const ModelParams& other, double factor);

  bool operator==(const ModelParams&) const = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> flat_;
};

enum class InitKind { Zero, Uniform };

ModelParams init_model(const std::vector<std::size_t>& layer_sizes, InitKind kind, double scale, Rng& rng);

struct ForwardResult {
  Matrix logits;
  FeatureVector features;  // column sums of the designated layer's activations
};

/// `feature_layer` in 1..L; L designates the logits. Hidden layers report
/// post-ReLU activations.
ForwardResult forward(const ModelParams& model, const Minibatch& batch, std::size_t feature_layer);

double cross_entropy(const Matrix& logits, std::span<const int> labels);

struct LossGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // flat order, same as ModelParams
  FeatureVector features;
};

/// Mean softmax cross-entropy and its gradient: one forward and one backward pass.
LossGradient loss_and_gradient(const ModelParams& model, const Minibatch& batch, std::size_t feature_layer);

struct TrainStep {
  ModelParams model;       // w^(b+1)
  double loss = 0.0;       // loss at w^(b)
  FeatureVector features;  // z(w^(b); B), taken from the same forward pass
};

/// One SGD step. Throws DivergenceError on a non-finite loss.
TrainStep batch_train(const ModelParams& model, const Minibatch& batch, double gamma,
                      std::size_t feature_layer);

struct ModelMessage {
  ModelParams model;
  std::size_t samples = 0;
  int sender = -1;
};

/// Sample-count weighted mean over the received messages (weights sum to 1).
ModelParams aggregate(std::span<const ModelMessage> messages);

std::vector<double> aggregation_weights(std::span<const ModelMessage> messages);

std::vector<int> predict(const ModelParams& model, const Matrix& inputs);

}  // namespace ehfl
