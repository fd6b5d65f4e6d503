#pragma once

#include <cstdint>
#include <cmath>
#include <numbers>

namespace postsel {

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

inline constexpr std::uint64_t kGolden64 = 0x9E3779B97F4A7C15ULL;

// Independent child stream k of a master seed.  Children of distinct (master, k)
// pairs behave as unrelated streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k) {
  return mix64(mix64(master) + kGolden64 * (k + 1));
}

// Counter-based SplitMix64 stream.  The n-th output is a pure function of
// (seed, n), so replaying a run gives bit-identical draws regardless of how
// the calls interleave with other streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() { return mix64(seed_ + (++counter_) * kGolden64); }

  // Uniform on the open interval (0, 1); safe as input to log or inverse CDFs.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Box-Muller, cosine branch.  Consumes exactly two uniforms per variate so
  // the stream position is a fixed function of the number of calls.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Laplace(0, b) by inverse CDF, one uniform per variate.
  double laplace(double b) {
    const double u = uniform() - 0.5;
    return (u < 0.0 ? b : -b) * std::log1p(-2.0 * std::abs(u));
  }

  // Uniform integer in [0, n), unbiased (Lemire rejection).
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t threshold = -n % n;
      while (lo < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace postsel
