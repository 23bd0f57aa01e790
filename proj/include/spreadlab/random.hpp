#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace spreadlab {

/// Identity of the generator written into output metadata.
inline constexpr std::string_view kRngName = "mt19937_64/splitmix64-substreams";

/// SplitMix64 finalizer. Used to derive independent sub-seeds from a parent
/// seed and a stream index.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Portable random stream. std::mt19937_64 output is fixed by the standard;
/// the std distributions are not, so every draw below is implemented here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();

  /// Index drawn from a discrete distribution with the given probabilities.
  std::size_t categorical(const std::vector<double>& probs);

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

  /// k distinct indices from 0..n-1, returned sorted ascending.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace spreadlab
