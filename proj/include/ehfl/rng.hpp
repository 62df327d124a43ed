#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ehfl {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Named substreams. A client's harvest stream depends only on (seed, client id),
/// so changing the policy or the data split never perturbs the energy trace.
enum class Stream : std::uint64_t {
  Harvest = 1,
  Batches,
  Probe,
  Pool,
  TestSet,
  Partition,
  Init,
  Selection,
};

inline Rng make_stream(std::uint64_t seed, Stream which, std::uint64_t index = 0) {
  std::uint64_t s = mix64(seed);
  s = mix64(s ^ (static_cast<std::uint64_t>(which) * 0xd1342543de82ef95ULL));
  s = mix64(s ^ index);
  return Rng{s};
}

/// Uniform double in [0, 1) from the top 53 bits; platform independent.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

}  // namespace ehfl
