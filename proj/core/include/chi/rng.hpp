#pragma once

#include <cstdint>

namespace chi {

// Counter-based splittable generator (splitmix64 finalizer over a counter).
// Stream (seed, id) is independent of every other id, so parallel consumers
// can draw without coordination and results do not depend on thread count.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : base_(mix(seed ^ (mix(stream_id + 0x9E3779B97F4A7C15ull) | 1ull))) {}

  std::uint64_t next_u64() {
    counter_ += 0x9E3779B97F4A7C15ull;
    return mix(base_ + counter_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

}  // namespace chi
