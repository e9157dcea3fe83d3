#pragma once

#include <cstdint>

namespace lcsim {

/// Stateless counter-based generator: the value at a counter is a keyed
/// SplitMix64 hash of (seed, counter). Draws can be replayed or audited per
/// event without carrying generator state between events.
class CounterRng {
public:
  explicit constexpr CounterRng(std::uint64_t seed) noexcept : key_{mix(seed ^ kSeedSalt)} {}

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return mix(key_ + (counter + 1) * kGolden);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kSeedSalt = 0x6a09e667f3bcc909ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

}  // namespace lcsim
