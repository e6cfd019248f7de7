#pragma once

#include <cstdint>
#include <random>

namespace polysp {

/// Seeded generator with a platform-independent uniform mapping.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
  std::uint64_t next() { return engine_(); }

  template <class It>
  void shuffle(It first, It last) {
    for (auto n = last - first; n > 1; --n) std::swap(first[n - 1], first[index(static_cast<std::size_t>(n))]);
  }

private:
  std::mt19937_64 engine_;
};

/// Seed of sample i in a family indexed by (seed, degree), decorrelated by a splitmix64 finalizer.
inline std::uint64_t sample_seed(std::uint64_t seed, int degree, std::size_t i) {
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(degree) * 0xBF58476D1CE4E5B9ull + i;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace polysp
