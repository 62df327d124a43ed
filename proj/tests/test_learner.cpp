#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "ehfl/client.hpp"
#include "ehfl/learner.hpp"

using namespace ehfl;

namespace {

Minibatch random_batch(Rng& rng, std::size_t n, std::size_t dim, int classes) {
  Minibatch b;
  b.inputs = Matrix(n, dim);
  for (double& v : b.inputs.data) v = 2.0 * uniform01(rng) - 1.0;
  for (std::size_t i = 0; i < n; ++i) b.labels.push_back(static_cast<int>(uniform01(rng) * classes));
  return b;
}

// 2 -> 2 (ReLU) -> 2, weights chosen by hand.
ModelParams hand_model() {
  ModelParams m({2, 2, 2});
  m.weight(1, 0, 0) = 1.0;
  m.weight(1, 0, 1) = -1.0;
  m.weight(1, 1, 0) = 0.5;
  m.weight(1, 1, 1) = 0.5;
  m.bias(1, 0) = 0.0;
  m.bias(1, 1) = -1.0;
  m.weight(2, 0, 0) = 2.0;
  m.weight(2, 0, 1) = 0.0;
  m.weight(2, 1, 0) = 1.0;
  m.weight(2, 1, 1) = -2.0;
  m.bias(2, 0) = 0.1;
  m.bias(2, 1) = 0.0;
  return m;
}

}  // namespace

TEST_CASE("parameter count and flat layout") {
  ModelParams m({16, 32, 4});
  CHECK(m.size() == (16 + 1) * 32 + (32 + 1) * 4);
  CHECK(m.weight_offset(1) == 0);
  CHECK(m.bias_offset(1) == 16 * 32);
  CHECK(m.weight_offset(2) == 17 * 32);
  m.weight(2, 1, 3) = 7.0;
  CHECK(m.flat()[17 * 32 + 1 * 32 + 3] == 7.0);
  CHECK_THROWS_AS(ModelParams({4}), ShapeError);
}

TEST_CASE("zero model gives zero logits and features") {
  Rng rng{1};
  const auto b = random_batch(rng, 5, 3, 4);
  const auto r = forward(ModelParams({3, 4}), b, 1);
  CHECK(std::all_of(r.logits.data.begin(), r.logits.data.end(), [](double v) { return v == 0.0; }));
  CHECK(r.features == FeatureVector{{0, 0, 0, 0}});
}

TEST_CASE("hand-computed forward pass") {
  Minibatch b;
  b.inputs = Matrix(1, 2);
  b.inputs(0, 0) = 1.0;
  b.inputs(0, 1) = 2.0;
  b.labels = {0};
  const auto m = hand_model();
  // hidden pre-activation (-1, 0.5) -> ReLU (0, 0.5); logits (0.1, -1.0)
  const auto hidden = forward(m, b, 1);
  CHECK(hidden.features.values[0] == 0.0);
  CHECK(hidden.features.values[1] == doctest::Approx(0.5));
  const auto out = forward(m, b, 2);
  CHECK(out.features.values[0] == doctest::Approx(0.1));
  CHECK(out.features.values[1] == doctest::Approx(-1.0));
  CHECK(out.logits(0, 1) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(forward(m, b, 3), ShapeError);
}

TEST_CASE("feature sums are additive over batch concatenation") {
  Rng rng{3};
  ModelParams m = init_model({4, 6, 3}, InitKind::Uniform, 0.5, rng);
  auto a = random_batch(rng, 3, 4, 3);
  auto b = random_batch(rng, 5, 4, 3);
  Minibatch ab;
  ab.inputs = Matrix(8, 4);
  std::copy(a.inputs.data.begin(), a.inputs.data.end(), ab.inputs.data.begin());
  std::copy(b.inputs.data.begin(), b.inputs.data.end(), ab.inputs.data.begin() + 12);
  ab.labels = a.labels;
  ab.labels.insert(ab.labels.end(), b.labels.begin(), b.labels.end());
  for (std::size_t layer : {1u, 2u}) {
    const auto fa = forward(m, a, layer).features;
    const auto fb = forward(m, b, layer).features;
    const auto fab = forward(m, ab, layer).features;
    for (std::size_t j = 0; j < fab.size(); ++j) CHECK(fab.values[j] == doctest::Approx(fa.values[j] + fb.values[j]));
  }

  // two identical rows -> exactly twice one row
  Minibatch one;
  one.inputs = Matrix(1, 4);
  std::copy(a.inputs.data.begin(), a.inputs.data.begin() + 4, one.inputs.data.begin());
  one.labels = {0};
  Minibatch twice;
  twice.inputs = Matrix(2, 4);
  std::copy(one.inputs.data.begin(), one.inputs.data.end(), twice.inputs.data.begin());
  std::copy(one.inputs.data.begin(), one.inputs.data.end(), twice.inputs.data.begin() + 4);
  twice.labels = {0, 0};
  const auto f1 = forward(m, one, 2).features;
  const auto f2 = forward(m, twice, 2).features;
  for (std::size_t j = 0; j < f1.size(); ++j) CHECK(f2.values[j] == 2.0 * f1.values[j]);
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng{77};
  for (int net = 0; net < 5; ++net) {
    const std::size_t d_in = 2 + net % 3, hidden = 3 + net, classes = 2 + net % 2;
    ModelParams m = init_model({d_in, hidden, classes}, InitKind::Uniform, 0.8, rng);
    const auto batch = random_batch(rng, 4, d_in, static_cast<int>(classes));
    const auto lg = loss_and_gradient(m, batch, 2);
    const double h = 1e-6;
    for (int probe_i = 0; probe_i < 20; ++probe_i) {
      const auto idx = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(m.size()));
      ModelParams plus = m, minus = m;
      plus.flat()[idx] += h;
      minus.flat()[idx] -= h;
      const double fd = (cross_entropy(forward(plus, batch, 2).logits, batch.labels) -
                         cross_entropy(forward(minus, batch, 2).logits, batch.labels)) /
                        (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(lg.gradient[idx]), 1e-8});
      CHECK(std::abs(fd - lg.gradient[idx]) / denom < 1e-4);
    }
  }
}

TEST_CASE("batch_train with gamma = 0 leaves parameters unchanged") {
  Rng rng{2};
  ModelParams m = init_model({3, 4, 2}, InitKind::Uniform, 0.3, rng);
  const auto batch = random_batch(rng, 6, 3, 2);
  CHECK(batch_train(m, batch, 0.0, 2).model == m);
}

TEST_CASE("repeated steps on one batch decrease its loss") {
  Rng rng{9};
  ModelParams m = init_model({5, 8, 3}, InitKind::Uniform, 0.3, rng);
  const auto batch = random_batch(rng, 10, 5, 3);
  double prev = cross_entropy(forward(m, batch, 2).logits, batch.labels);
  for (int i = 0; i < 50; ++i) {
    auto step = batch_train(m, batch, 0.05, 2);
    CHECK(step.loss == doctest::Approx(prev));
    m = std::move(step.model);
    const double now = cross_entropy(forward(m, batch, 2).logits, batch.labels);
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("non-finite loss is reported as divergence") {
  ModelParams m({1, 2});
  m.weight(1, 0, 0) = std::numeric_limits<double>::infinity();
  m.weight(1, 1, 0) = -std::numeric_limits<double>::infinity();
  Minibatch b;
  b.inputs = Matrix(1, 1, 1.0);
  b.labels = {1};
  CHECK_THROWS_AS(batch_train(m, b, 0.1, 1), DivergenceError);
}

TEST_CASE("shape errors") {
  Minibatch b;
  b.inputs = Matrix(2, 3);
  b.labels = {0, 1};
  CHECK_THROWS_AS(forward(ModelParams({4, 2}), b, 1), ShapeError);
  b.labels = {0};
  CHECK_THROWS_AS(forward(ModelParams({3, 2}), b, 1), ShapeError);
}

TEST_CASE("aggregate examples") {
  Rng rng{4};
  ModelParams w = init_model({3, 2}, InitKind::Uniform, 1.0, rng);
  ModelParams neg = w;
  neg.scale(-1.0);

  std::vector<ModelMessage> pair{{w, 50, 0}, {neg, 50, 1}};
  const auto zero = aggregate(pair);
  for (double v : zero.flat()) CHECK(v == doctest::Approx(0.0));

  std::vector<ModelMessage> single{{w, 17, 3}};
  CHECK(aggregate(single) == w);

  ModelParams a = init_model({3, 2}, InitKind::Uniform, 1.0, rng);
  ModelParams b = init_model({3, 2}, InitKind::Uniform, 1.0, rng);
  ModelParams c = init_model({3, 2}, InitKind::Uniform, 1.0, rng);
  std::vector<ModelMessage> three{{a, 100, 0}, {b, 200, 1}, {c, 100, 2}};
  const auto beta = aggregation_weights(three);
  CHECK(beta[0] == 0.25);
  CHECK(beta[1] == 0.5);
  CHECK(beta[2] == 0.25);
  const auto g = aggregate(three);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double expect = (100 * a.flat()[i] + 200 * b.flat()[i] + 100 * c.flat()[i]) / 400.0;
    CHECK(g.flat()[i] == doctest::Approx(expect).epsilon(1e-12));
  }

  std::vector<ModelMessage> mixed{{a, 1, 0}, {ModelParams({3, 3}), 1, 1}};
  CHECK_THROWS_AS(aggregate(mixed), ShapeError);
  CHECK_THROWS(aggregate(std::span<const ModelMessage>{}));
}

TEST_CASE("aggregate is permutation invariant and its weights sum to one") {
  Rng rng{8};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ModelMessage> msgs;
    const int n = 1 + static_cast<int>(uniform01(rng) * 6);
    for (int i = 0; i < n; ++i)
      msgs.push_back({init_model({2, 3, 2}, InitKind::Uniform, 1.0, rng),
                      1 + static_cast<std::size_t>(uniform01(rng) * 300), i});
    const auto beta = aggregation_weights(msgs);
    CHECK(std::abs(std::accumulate(beta.begin(), beta.end(), 0.0) - 1.0) < 1e-12);
    const auto g = aggregate(msgs);
    std::reverse(msgs.begin(), msgs.end());
    const auto r = aggregate(msgs);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(g.flat()[i] - r.flat()[i]) < 1e-12);
  }
}

TEST_CASE("finalize_training averages feature sums over samples seen") {
  ClientState c;
  c.id = 4;
  c.local_model = ModelParams({2, 2});
  c.training_epoch = 6;
  std::vector<FeatureVector> sums{{{2, 4}}, {{4, 0}}};
  finalize_training(c, sums, 4, 2, 4);
  REQUIRE(c.historical_moment);
  CHECK(c.historical_moment->values == std::vector<double>{1.5, 1.0});
  REQUIRE(c.pending_message);
  CHECK(c.pending_message->samples == 4);
  CHECK(c.pending_message->sender == 4);
  CHECK(c.last_train_epoch == 6);

  ClientState z;
  z.local_model = ModelParams({2, 2});
  std::vector<FeatureVector> zeros{{{0, 0}}, {{0, 0}}};
  finalize_training(z, zeros, 6, 2, 6);
  CHECK(z.historical_moment->values == std::vector<double>{0, 0});

  std::vector<FeatureVector> short_list{{{1, 1}}};
  CHECK_THROWS_AS(finalize_training(z, short_list, 2, 2, 6), std::logic_error);
}

TEST_CASE("large-preset normalizer: 20 batches of 15 cover 300 samples") {
  ClientState c;
  c.local_model = ModelParams({1, 1});
  std::vector<FeatureVector> sums(20, FeatureVector{{15.0}});  // each sample contributes 1
  finalize_training(c, sums, 20 * 15, 20, 300);
  CHECK(c.historical_moment->values[0] == doctest::Approx(1.0));
}
