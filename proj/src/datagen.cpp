#include "ehfl/datagen.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

namespace ehfl {

std::vector<std::size_t> Dataset::class_histogram() const {
  std::vector<std::size_t> h(static_cast<std::size_t>(classes), 0);
  for (int y : labels) ++h[static_cast<std::size_t>(y)];
  return h;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.classes = classes;
  out.inputs = Matrix(rows.size(), inputs.cols);
  out.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto src = inputs.row(rows[r]);
    std::copy(src.begin(), src.end(), out.inputs.data.begin() + static_cast<std::ptrdiff_t>(r * inputs.cols));
    out.labels.push_back(labels[rows[r]]);
  }
  return out;
}

Dataset generate_pool(const PoolSpec& spec, std::uint64_t mean_seed, std::uint64_t sample_seed) {
  if (spec.classes < 2) throw std::invalid_argument("generate_pool: need at least 2 classes");
  if (spec.dim == 0) throw std::invalid_argument("generate_pool: dim must be positive");
  const auto classes = static_cast<std::size_t>(spec.classes);

  Rng mean_rng = make_stream(mean_seed, Stream::Pool);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix means(classes, spec.dim);
  for (double& v : means.data) v = spec.mean_spread * normal(mean_rng);

  Rng rng{mix64(sample_seed)};
  Dataset d;
  d.classes = spec.classes;
  d.inputs = Matrix(classes * spec.per_class, spec.dim);
  d.labels.reserve(classes * spec.per_class);
  std::size_t r = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t k = 0; k < spec.per_class; ++k, ++r) {
      for (std::size_t j = 0; j < spec.dim; ++j) d.inputs(r, j) = means(c, j) + normal(rng);
      d.labels.push_back(static_cast<int>(c));
    }
  }
  return d;
}

std::vector<std::size_t> apportion(std::span<const double> proportions, std::size_t total) {
  const double sum = std::accumulate(proportions.begin(), proportions.end(), 0.0);
  std::vector<std::size_t> out(proportions.size(), 0);
  if (proportions.empty() || sum <= 0.0) return out;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < proportions.size(); ++c) {
    const double exact = proportions[c] / sum * static_cast<double>(total);
    out[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += out[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  // Largest remainder first; lower class id wins ties.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total; i = (i + 1) % remainders.size(), ++assigned)
    ++out[remainders[i].second];
  return out;
}

std::vector<Dataset> dirichlet_partition(const Dataset& pool, const PartitionSpec& spec, Rng& rng) {
  if (!(spec.alpha > 0.0)) throw std::invalid_argument("dirichlet_partition: alpha must be positive");
  if (spec.clients * spec.samples_per_client > pool.size())
    throw PartitionError("pool has " + std::to_string(pool.size()) + " samples, partition needs " +
                         std::to_string(spec.clients * spec.samples_per_client));
  const auto classes = static_cast<std::size_t>(pool.classes);

  std::vector<std::vector<std::size_t>> stock(classes);
  for (std::size_t r = 0; r < pool.size(); ++r) stock[static_cast<std::size_t>(pool.labels[r])].push_back(r);
  for (auto& s : stock) std::shuffle(s.begin(), s.end(), rng);

  std::gamma_distribution<double> gamma(spec.alpha, 1.0);
  std::vector<Dataset> out;
  out.reserve(spec.clients);
  for (std::size_t i = 0; i < spec.clients; ++i) {
    std::vector<double> p(classes);
    for (double& v : p) v = gamma(rng);
    if (std::accumulate(p.begin(), p.end(), 0.0) <= 0.0) {
      // every gamma draw underflowed; put all mass on one class
      std::fill(p.begin(), p.end(), 0.0);
      p[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(classes))] = 1.0;
    }

    std::vector<std::size_t> rows;
    rows.reserve(spec.samples_per_client);
    auto quota = apportion(p, spec.samples_per_client);
    std::size_t missing = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      const std::size_t take = std::min(quota[c], stock[c].size());
      rows.insert(rows.end(), stock[c].end() - static_cast<std::ptrdiff_t>(take), stock[c].end());
      stock[c].resize(stock[c].size() - take);
      missing += quota[c] - take;
    }
    // Exhausted classes: spread the shortfall over classes that still have stock,
    // proportionally to what they have left.
    while (missing > 0) {
      std::vector<double> left(classes);
      for (std::size_t c = 0; c < classes; ++c) left[c] = static_cast<double>(stock[c].size());
      auto extra = apportion(left, missing);
      std::size_t got = 0;
      for (std::size_t c = 0; c < classes; ++c) {
        const std::size_t take = std::min(extra[c], stock[c].size());
        rows.insert(rows.end(), stock[c].end() - static_cast<std::ptrdiff_t>(take), stock[c].end());
        stock[c].resize(stock[c].size() - take);
        got += take;
      }
      if (got == 0) throw PartitionError("pool exhausted during partition");
      missing -= got;
    }
    out.push_back(pool.subset(rows));
  }
  return out;
}

BatchStream::BatchStream(std::size_t n, Rng rng) : order_(n), rng_(std::move(rng)) {
  if (n == 0) throw std::invalid_argument("BatchStream: empty dataset");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  reshuffle();
}

void BatchStream::reshuffle() {
  std::shuffle(order_.begin(), order_.end(), rng_);
  cursor_ = 0;
}

std::vector<std::size_t> BatchStream::next(std::size_t batch_size) {
  if (batch_size == 0 || batch_size > order_.size())
    throw std::invalid_argument("BatchStream: batch size must lie in [1, n]");
  std::vector<std::size_t> rows;
  rows.reserve(batch_size);
  while (rows.size() < batch_size) {
    if (cursor_ == order_.size()) reshuffle();
    rows.push_back(order_[cursor_++]);
  }
  if (cursor_ == order_.size()) reshuffle();
  return rows;
}

Minibatch make_batch(const Dataset& data, std::span<const std::size_t> rows) {
  Dataset s = data.subset(rows);
  return Minibatch{std::move(s.inputs), std::move(s.labels)};
}

Minibatch whole(const Dataset& data) { return Minibatch{data.inputs, data.labels}; }

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw std::runtime_error("dataset file truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  put<std::uint32_t>(os, kDatasetMagic);
  put<std::uint32_t>(os, kDatasetVersion);
  put<std::uint64_t>(os, data.size());
  put<std::uint32_t>(os, static_cast<std::uint32_t>(data.inputs.cols));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(data.classes));
  for (double v : data.inputs.data) put<float>(os, static_cast<float>(v));
  for (int y : data.labels) put<std::int32_t>(os, y);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  if (get<std::uint32_t>(is) != kDatasetMagic) throw std::runtime_error("bad dataset magic");
  if (const auto v = get<std::uint32_t>(is); v != kDatasetVersion)
    throw std::runtime_error("unsupported dataset version " + std::to_string(v));
  const auto n = get<std::uint64_t>(is);
  const auto dim = get<std::uint32_t>(is);
  const auto classes = get<std::uint32_t>(is);
  if (n == 0 || dim == 0 || classes < 2) throw std::runtime_error("degenerate dataset header");
  Dataset d;
  d.classes = static_cast<int>(classes);
  d.inputs = Matrix(n, dim);
  for (double& v : d.inputs.data) v = get<float>(is);
  d.labels.resize(n);
  for (int& y : d.labels) {
    y = get<std::int32_t>(is);
    if (y < 0 || static_cast<std::uint32_t>(y) >= classes) throw std::runtime_error("label out of range");
  }
  return d;
}

}  // namespace ehfl
