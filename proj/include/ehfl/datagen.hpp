#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ehfl/learner.hpp"
#include "ehfl/rng.hpp"

namespace ehfl {

struct Dataset {
  Matrix inputs;
  std::vector<int> labels;
  int classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::vector<std::size_t> class_histogram() const;
  Dataset subset(std::span<const std::size_t> rows) const;
};

struct PoolSpec {
  int classes = 4;
  std::size_t dim = 16;
  std::size_t per_class = 100;
  double mean_spread = 1.0;  // std-dev of each class-mean coordinate
};

/// Class-conditional Gaussians with unit covariance. Class means are a function
/// of `mean_seed` only, so a pool and a held-out test set drawn with different
/// `sample_seed`s share the same mixture.
Dataset generate_pool(const PoolSpec& spec, std::uint64_t mean_seed, std::uint64_t sample_seed);

struct PartitionSpec {
  double alpha = 1.0;
  std::size_t clients = 1;
  std::size_t samples_per_client = 1;
};

class PartitionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-client Dirichlet(alpha) class proportions, realized without replacement
/// from the pool. No pool row is handed to two clients.
std::vector<Dataset> dirichlet_partition(const Dataset& pool, const PartitionSpec& spec, Rng& rng);

/// Integer class quotas summing to `total` (largest-remainder rounding).
std::vector<std::size_t> apportion(std::span<const double> proportions, std::size_t total);

/// Without-replacement sweeps over one client's data, reshuffled at each
/// sweep boundary.
class BatchStream {
 public:
  BatchStream(std::size_t n, Rng rng);

  /// Row indices of the next batch. A batch that crosses the sweep boundary
  /// is completed from the freshly shuffled next sweep.
  std::vector<std::size_t> next(std::size_t batch_size);

  std::size_t cursor() const noexcept { return cursor_; }

 private:
  void reshuffle();

  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  Rng rng_;
};

Minibatch make_batch(const Dataset& data, std::span<const std::size_t> rows);
Minibatch whole(const Dataset& data);

// Binary dataset file, little-endian. See docs/dataset_format.md.
inline constexpr std::uint32_t kDatasetMagic = 0x4C464845;  // "EHFL"
inline constexpr std::uint32_t kDatasetVersion = 1;

void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace ehfl
