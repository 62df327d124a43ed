#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

#include "doctest.h"
#include "ehfl/datagen.hpp"

using namespace ehfl;

namespace {

double tv_to_uniform(const Dataset& d) {
  const auto h = d.class_histogram();
  double tv = 0.0;
  for (auto c : h) tv += std::abs(static_cast<double>(c) / static_cast<double>(d.size()) - 1.0 / h.size());
  return tv / 2.0;
}

double top2_share(const Dataset& d) {
  auto h = d.class_histogram();
  std::sort(h.rbegin(), h.rend());
  return static_cast<double>(h[0] + h[1]) / static_cast<double>(d.size());
}

double proportion_variance(const std::vector<Dataset>& parts) {
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& d : parts) {
    const auto h = d.class_histogram();
    for (auto c : h) {
      const double p = static_cast<double>(c) / static_cast<double>(d.size());
      acc += (p - 1.0 / h.size()) * (p - 1.0 / h.size());
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

}  // namespace

TEST_CASE("pool bookkeeping and determinism") {
  PoolSpec spec{2, 5, 100, 1.0};
  const auto a = generate_pool(spec, 1, 2);
  CHECK(a.size() == 200);
  CHECK(a.class_histogram() == std::vector<std::size_t>{100, 100});
  const auto b = generate_pool(spec, 1, 2);
  CHECK(a.inputs.data == b.inputs.data);
  CHECK(a.labels == b.labels);
  const auto c = generate_pool(spec, 1, 3);
  CHECK(a.inputs.data != c.inputs.data);
  CHECK_THROWS_AS(generate_pool(PoolSpec{1, 5, 10, 1.0}, 1, 1), std::invalid_argument);
}

TEST_CASE("well separated pool is linearly separable") {
  PoolSpec spec{3, 8, 200, 3.0};
  const auto train = generate_pool(spec, 10, 11);
  const auto test = generate_pool(spec, 10, 12);
  ModelParams m({8, 3});
  const auto batch = whole(train);
  for (int i = 0; i < 300; ++i) m = batch_train(m, batch, 0.5, 1).model;
  const auto pred = predict(m, test.inputs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == test.labels[i] ? 1 : 0;
  CHECK(static_cast<double>(correct) / static_cast<double>(pred.size()) > 0.95);
}

TEST_CASE("partition: exact counts and no row shared between clients") {
  PoolSpec spec{10, 4, 6000, 1.0};
  const auto pool = generate_pool(spec, 3, 4);
  // tag each row with its index in the first coordinate so rows can be traced
  Dataset tagged = pool;
  for (std::size_t r = 0; r < tagged.size(); ++r) tagged.inputs(r, 0) = static_cast<double>(r);
  for (double alpha : {0.1, 1.0, 10.0}) {
    Rng rng{static_cast<std::uint64_t>(alpha * 1000)};
    const auto parts = dirichlet_partition(tagged, PartitionSpec{alpha, 100, 300}, rng);
    REQUIRE(parts.size() == 100);
    std::set<std::size_t> seen;
    for (const auto& d : parts) {
      CHECK(d.size() == 300);
      for (std::size_t r = 0; r < d.size(); ++r) {
        const auto id = static_cast<std::size_t>(d.inputs(r, 0));
        CHECK(seen.insert(id).second);
        CHECK(tagged.labels[id] == d.labels[r]);
      }
    }
  }
}

TEST_CASE("partition heterogeneity follows alpha") {
  PoolSpec spec{10, 2, 1200, 1.0};
  const auto pool = generate_pool(spec, 5, 6);
  std::vector<double> variance(3, 0.0);
  const double alphas[] = {0.1, 1.0, 10.0};
  double tv_large = 0.0;
  int skewed_majorities = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (std::size_t a = 0; a < 3; ++a) {
      Rng rng = make_stream(seed, Stream::Partition);
      const auto parts = dirichlet_partition(pool, PartitionSpec{alphas[a], 20, 300}, rng);
      variance[a] += proportion_variance(parts);
      if (a == 2)
        for (const auto& d : parts) tv_large += tv_to_uniform(d) / (20.0 * 10.0);
      if (a == 0) {
        const auto skewed = std::count_if(parts.begin(), parts.end(), [](const Dataset& d) { return top2_share(d) >= 0.7; });
        skewed_majorities += skewed * 2 >= 20 ? 1 : 0;
      }
    }
  }
  CHECK(variance[0] > variance[1]);
  CHECK(variance[1] > variance[2]);
  CHECK(tv_large < 0.2);
  CHECK(skewed_majorities == 10);
}

TEST_CASE("partition fallback and exhaustion") {
  // one class only has 10 rows; alpha tiny forces single-class demand
  Dataset pool = generate_pool(PoolSpec{2, 2, 50, 1.0}, 1, 1);
  Rng rng{1};
  const auto parts = dirichlet_partition(pool, PartitionSpec{0.01, 5, 20}, rng);
  for (const auto& d : parts) CHECK(d.size() == 20);
  Rng rng2{1};
  CHECK_THROWS_AS(dirichlet_partition(pool, PartitionSpec{1.0, 6, 20}, rng2), PartitionError);
}

TEST_CASE("apportion sums to the total") {
  const std::vector<double> p{0.333, 0.333, 0.334};
  const auto q = apportion(p, 10);
  CHECK(std::accumulate(q.begin(), q.end(), std::size_t{0}) == 10);
  CHECK(apportion(std::vector<double>{1.0, 0.0}, 7) == std::vector<std::size_t>{7, 0});
}

TEST_CASE("batch stream: kappa batches cover the data once") {
  BatchStream s(300, Rng{5});
  std::vector<std::size_t> all;
  for (int b = 0; b < 20; ++b) {
    const auto rows = s.next(15);
    CHECK(rows.size() == 15);
    all.insert(all.end(), rows.begin(), rows.end());
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expect(300);
  std::iota(expect.begin(), expect.end(), std::size_t{0});
  CHECK(all == expect);
  CHECK(s.cursor() == 0);
}

TEST_CASE("batch stream: full batch, reshuffle per sweep, determinism") {
  BatchStream a(60, Rng{9}), b(60, Rng{9});
  const auto first = a.next(60);
  const auto second = a.next(60);
  CHECK(first != second);
  auto sorted = first;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted.front() == 0);
  CHECK(sorted.back() == 59);
  CHECK(b.next(60) == first);
  CHECK(b.next(60) == second);
  CHECK_THROWS_AS(a.next(61), std::invalid_argument);
}

TEST_CASE("dataset file round trip") {
  const auto d = generate_pool(PoolSpec{3, 4, 5, 1.0}, 2, 3);
  const auto path = std::filesystem::temp_directory_path() / "ehfl_dataset_test.bin";
  save_dataset(d, path);
  CHECK(std::filesystem::file_size(path) == 4 + 4 + 8 + 4 + 4 + 15 * 4 * 4 + 15 * 4);
  const auto back = load_dataset(path);
  CHECK(back.labels == d.labels);
  CHECK(back.classes == 3);
  for (std::size_t i = 0; i < d.inputs.data.size(); ++i)
    CHECK(back.inputs.data[i] == static_cast<double>(static_cast<float>(d.inputs.data[i])));
  std::filesystem::remove(path);
}
