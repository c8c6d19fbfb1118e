#pragma once

#include <cstdint>
#include <span>

namespace pcawald {

/// SplitMix64 output function (Steele, Lea & Flood 2014).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

/// Seed for replication `index` of an experiment with `base` seed. Depends only
/// on the pair, so replications can run in any order on any thread.
constexpr std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) noexcept {
  return splitmix64_mix(splitmix64_mix(base) ^ splitmix64_mix((index + 1) * kGoldenGamma));
}

/// Counter-based generator: the k-th 64-bit word is splitmix64_mix(key + (k+1)·γ),
/// a pure function of (key, k).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return splitmix64_mix(key_ + counter_ * kGoldenGamma);
  }

  /// Uniform on the open interval (0, 1).
  double next_uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal by the 128-layer ziggurat method; most draws cost one word.
  double next_gaussian() noexcept;

  void fill_gaussian(std::span<double> out) noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace pcawald
