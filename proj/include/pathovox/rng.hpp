#pragma once

#include <bit>
#include <cstdint>
#include <vector>

namespace pathovox {

/// Deterministic 64-bit PRNG (xoshiro256++ seeded via splitmix64).
///
/// The stream depends only on the seed, never on the standard library,
/// so identical seeds yield identical draws on every platform. Copying
/// an Rng copies its state; the copy replays the same stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = std::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = std::rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + next_double() * (hi - lo); }

  /// Unbiased uniform integer in [0, n). n must be nonzero.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t mask = ~std::uint64_t{0} >> std::countl_zero(n | 1);
    for (;;) {
      const std::uint64_t x = next_u64() & mask;
      if (x < n) return x;
    }
  }

  /// Seeded Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  /// Derives an independent substream keyed by `tag`.
  Rng fork(std::uint64_t tag) const {
    std::uint64_t x = state_[0] ^ std::rotl(state_[2], 31) ^ tag;
    return Rng(splitmix64(x));
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_[4];
};

}  // namespace pathovox
