#pragma once

#include <cstdint>
#include <random>

namespace slicesim {

// Deterministic random stream. All draws go through explicit integer
// mappings so a (seed, draw sequence) pair yields identical values on any
// platform, independent of library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double next_in(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Uniform in {0, ..., n-1} via fixed-point scaling; bias is below 2^-64
  // for the small n used here.
  std::uint64_t next_below(std::uint64_t n) {
    return std::uint64_t((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace slicesim
