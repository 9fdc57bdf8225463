#pragma once

#include <cstdint>
#include <limits>

namespace qmcvi {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

// SplitMix64 output mixer (a bijection on 64-bit words).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
  return mix64(seed ^ mix64(salt * kGoldenGamma + kGoldenGamma));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
  return derive_seed(derive_seed(seed, a), b);
}

constexpr double bits_to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Counter-based generator: word `counter` of stream (seed, stream) is a pure
// function of the three integers, so batches can be filled in any order.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_(derive_seed(seed, stream)) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return mix64(key_ ^ mix64((counter + 1) * kGoldenGamma));
  }

  constexpr double uniform(std::uint64_t counter) const noexcept { return bits_to_unit(bits(counter)); }

 private:
  std::uint64_t key_;
};

// Sequential SplitMix64; satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  // Uniform on (0,1): never returns exactly 0.
  constexpr double open_uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

}  // namespace qmcvi
