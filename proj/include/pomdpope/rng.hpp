#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>

namespace pomdpope {

/// Counter-based deterministic generator (SplitMix64 core).
///
/// Streams are identified by a 64-bit key; deriving independent substreams is
/// a pure function of (key, counter), so parallel consumers get identical
/// results regardless of execution order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Combine a label and integer fields into a stream key.
  static std::uint64_t key(std::string_view label, std::span<const std::uint64_t> fields) {
    std::uint64_t k = 0xcbf29ce484222325ULL;
    for (char c : label) k = (k ^ static_cast<std::uint8_t>(c)) * 0x100000001b3ULL;
    for (std::uint64_t f : fields) k = mix(k ^ f);
    return k;
  }

  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    return Rng(mix(mix(seed) ^ (index * 0xd1342543de82ef95ULL + 1)));
  }

  std::uint64_t nextU64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double nextDouble() { return static_cast<double>(nextU64() >> 11) * 0x1.0p-53; }

  /// Exponential(1) variate.
  double nextExponential() {
    double u;
    do {
      u = nextDouble();
    } while (u <= 0.0);
    return -std::log(u);
  }

  /// Index sampled from an (unnormalized, nonnegative) weight vector.
  template <typename Vec>
  int nextCategorical(const Vec& weights) {
    double total = 0.0;
    for (int i = 0; i < static_cast<int>(weights.size()); ++i) total += weights[i];
    double u = nextDouble() * total;
    double acc = 0.0;
    int last = 0;
    for (int i = 0; i < static_cast<int>(weights.size()); ++i) {
      if (weights[i] <= 0.0) continue;
      acc += weights[i];
      last = i;
      if (u < acc) return i;
    }
    return last;
  }

 private:
  std::uint64_t state_;
};

}  // namespace pomdpope
