#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace gmc {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based uniform bit stream keyed by (seed, replica, level, stream).
/// The i-th output depends only on the key and i, so any replica can be
/// regenerated independently of scheduling.
class KeyedStream {
 public:
  using result_type = std::uint64_t;

  KeyedStream(std::uint64_t seed, std::uint64_t replica, std::uint64_t level, std::uint64_t stream = 0)
      : key_(splitmix64(splitmix64(splitmix64(splitmix64(seed) ^ replica) ^ (level * 0x632be59bd9b4e019ULL)) ^
                        (stream + 0x2545f4914f6cdd1dULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * counter_++); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace gmc
