#pragma once

#include <cstdint>

namespace parlor {

// splitmix64. Fixed so that seeded runs reproduce across implementations.
class SplitMix64 {
 public:
  static constexpr std::uint64_t kIncrement = 0x9E3779B97F4A7C15ULL;

  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    state_ += kIncrement;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  constexpr std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

// One generator step from `seed`.
constexpr std::uint64_t splitmix64(std::uint64_t seed) { return SplitMix64(seed).next(); }

}  // namespace parlor
