#include "ehfl/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ehfl {

ModelParams::ModelParams(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw ShapeError("model needs at least an input and an output layer");
  std::size_t total = 0;
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    if (sizes_[l] == 0 || sizes_[l - 1] == 0) throw ShapeError("layer widths must be positive");
    offsets_.push_back(total);
    total += (sizes_[l - 1] + 1) * sizes_[l];
  }
  flat_.assign(total, 0.0);
}

ModelParams& ModelParams::scale(double factor) noexcept {
  for (double& v : flat_) v *= factor;
  return *this;
}

ModelParams& ModelParams::add_scaled(const ModelParams& other, double factor) {
  if (!same_shape(other)) throw ShapeError("add_scaled: layer sizes differ");
  for (std::size_t i = 0; i < flat_.size(); ++i) flat_[i] += factor * other.flat_[i];
  return *this;
}

ModelParams init_model(const std::vector<std::size_t>& layer_sizes, InitKind kind, double scale, Rng& rng) {
  ModelParams m(layer_sizes);
  if (kind == InitKind::Uniform) {
    for (double& v : m.flat()) v = (2.0 * uniform01(rng) - 1.0) * scale;
  }
  return m;
}

namespace {

void check_batch(const ModelParams& model, const Minibatch& batch) {
  if (batch.inputs.cols != model.input_dim()) {
    throw ShapeError("input width " + std::to_string(batch.inputs.cols) + " does not match model input " +
                     std::to_string(model.input_dim()));
  }
  if (batch.inputs.rows != batch.labels.size()) throw ShapeError("inputs/labels row count mismatch");
  if (batch.labels.empty()) throw ShapeError("empty minibatch");
}

// activations[0] is the input; activations[l] is the output of layer l
// (post-ReLU for hidden layers, raw logits for the last).
std::vector<Matrix> forward_all(const ModelParams& model, const Matrix& inputs) {
  const std::size_t layers = model.num_layers();
  std::vector<Matrix> acts;
  acts.reserve(layers + 1);
  acts.push_back(inputs);
  for (std::size_t l = 1; l <= layers; ++l) {
    const Matrix& in = acts.back();
    const std::size_t fan_in = model.width(l - 1);
    const std::size_t fan_out = model.width(l);
    Matrix out(in.rows, fan_out);
    const double* w = model.flat().data() + model.weight_offset(l);
    const double* b = model.flat().data() + model.bias_offset(l);
    for (std::size_t r = 0; r < in.rows; ++r) {
      const double* x = in.data.data() + r * fan_in;
      for (std::size_t o = 0; o < fan_out; ++o) {
        double acc = b[o];
        const double* wrow = w + o * fan_in;
        for (std::size_t i = 0; i < fan_in; ++i) acc += wrow[i] * x[i];
        out(r, o) = (l < layers) ? std::max(acc, 0.0) : acc;
      }
    }
    acts.push_back(std::move(out));
  }
  return acts;
}

FeatureVector column_sums(const Matrix& m) {
  FeatureVector f{std::vector<double>(m.cols, 0.0)};
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) f.values[c] += m(r, c);
  return f;
}

void check_feature_layer(const ModelParams& model, std::size_t feature_layer) {
  if (feature_layer < 1 || feature_layer > model.num_layers())
    throw ShapeError("feature layer " + std::to_string(feature_layer) + " outside 1.." +
                     std::to_string(model.num_layers()));
}

}  // namespace

ForwardResult forward(const ModelParams& model, const Minibatch& batch, std::size_t feature_layer) {
  check_batch(model, batch);
  check_feature_layer(model, feature_layer);
  auto acts = forward_all(model, batch.inputs);
  ForwardResult r;
  r.features = column_sums(acts[feature_layer]);
  r.logits = std::move(acts.back());
  return r;
}

double cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (logits.rows != labels.size()) throw ShapeError("cross_entropy: row count mismatch");
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows; ++r) {
    auto row = logits.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    total += (mx + std::log(z)) - row[static_cast<std::size_t>(labels[r])];
  }
  return total / static_cast<double>(logits.rows);
}

LossGradient loss_and_gradient(const ModelParams& model, const Minibatch& batch, std::size_t feature_layer) {
  check_batch(model, batch);
  check_feature_layer(model, feature_layer);
  const std::size_t layers = model.num_layers();
  const std::size_t n = batch.size();
  for (int y : batch.labels)
    if (y < 0 || static_cast<std::size_t>(y) >= model.output_dim()) throw ShapeError("label out of range");

  auto acts = forward_all(model, batch.inputs);
  LossGradient out;
  out.features = column_sums(acts[feature_layer]);
  out.loss = cross_entropy(acts.back(), batch.labels);
  out.gradient.assign(model.size(), 0.0);

  // delta = dL/d(pre-activation) of the current layer
  Matrix delta(n, model.output_dim());
  for (std::size_t r = 0; r < n; ++r) {
    auto row = acts.back().row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double p = std::exp(row[c] - mx) / z;
      delta(r, c) = (p - (static_cast<int>(c) == batch.labels[r] ? 1.0 : 0.0)) / static_cast<double>(n);
    }
  }

  for (std::size_t l = layers; l >= 1; --l) {
    const std::size_t fan_in = model.width(l - 1);
    const std::size_t fan_out = model.width(l);
    const Matrix& in = acts[l - 1];
    double* gw = out.gradient.data() + model.weight_offset(l);
    double* gb = out.gradient.data() + model.bias_offset(l);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t o = 0; o < fan_out; ++o) {
        const double d = delta(r, o);
        gb[o] += d;
        double* grow = gw + o * fan_in;
        for (std::size_t i = 0; i < fan_in; ++i) grow[i] += d * in(r, i);
      }
    }
    if (l == 1) break;
    Matrix prev(n, fan_in);
    const double* w = model.flat().data() + model.weight_offset(l);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t i = 0; i < fan_in; ++i) {
        if (in(r, i) <= 0.0) continue;  // ReLU gate
        double acc = 0.0;
        for (std::size_t o = 0; o < fan_out; ++o) acc += delta(r, o) * w[o * fan_in + i];
        prev(r, i) = acc;
      }
    }
    delta = std::move(prev);
  }
  return out;
}

TrainStep batch_train(const ModelParams& model, const Minibatch& batch, double gamma, std::size_t feature_layer) {
  LossGradient lg = loss_and_gradient(model, batch, feature_layer);
  if (!std::isfinite(lg.loss)) throw DivergenceError("non-finite training loss");
  TrainStep step{model, lg.loss, std::move(lg.features)};
  auto w = step.model.flat();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= gamma * lg.gradient[i];
  return step;
}

std::vector<double> aggregation_weights(std::span<const ModelMessage> messages) {
  double total = 0.0;
  for (const auto& m : messages) total += static_cast<double>(m.samples);
  std::vector<double> beta;
  beta.reserve(messages.size());
  for (const auto& m : messages) beta.push_back(static_cast<double>(m.samples) / total);
  return beta;
}

ModelParams aggregate(std::span<const ModelMessage> messages) {
  if (messages.empty()) throw std::invalid_argument("aggregate: no messages");
  for (const auto& m : messages) {
    if (!m.model.same_shape(messages.front().model)) throw ShapeError("aggregate: layer sizes differ");
    if (m.samples == 0) throw std::invalid_argument("aggregate: message with zero samples");
  }
  const auto beta = aggregation_weights(messages);
  ModelParams out(messages.front().model.layer_sizes());
  for (std::size_t j = 0; j < messages.size(); ++j) out.add_scaled(messages[j].model, beta[j]);
  return out;
}

std::vector<int> predict(const ModelParams& model, const Matrix& inputs) {
  if (inputs.cols != model.input_dim()) throw ShapeError("predict: input width mismatch");
  auto acts = forward_all(model, inputs);
  const Matrix& logits = acts.back();
  std::vector<int> out(logits.rows);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    auto row = logits.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace ehfl
