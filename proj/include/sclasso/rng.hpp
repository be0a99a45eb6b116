#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sclasso {

/// Substream tags. Fixed so each random component of a run can be reproduced
/// independently of the others.
namespace rng_stream {
inline constexpr std::uint64_t kDesign = 0;        // rows of X
inline constexpr std::uint64_t kCoefficients = 1;  // raw coefficient draws
inline constexpr std::uint64_t kSparsityMask = 2;  // indices forced to zero
inline constexpr std::uint64_t kNoise = 3;         // additive noise
inline constexpr std::uint64_t kCvFolds = 16;      // fold shuffle
inline constexpr std::uint64_t kRcvSplit = 17;     // half split
}  // namespace rng_stream

/// One splitmix64 round. Used to derive substream and per-replication seeds
/// so that every component of a simulation is independently reproducible.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// mt19937_64 wrapper that produces identical streams on every platform:
/// variates are built from raw 64-bit draws instead of std:: distributions,
/// whose output is implementation-defined.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream) : gen_(mix_seed(seed, stream)) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on (0, 1), strictly inside the interval.
  double uniform() { return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; draws come in cached pairs.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = kTwoPi_ * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Standard Laplace (density e^{-|x|}/2) by CDF inversion.
  double laplace() {
    const double u = uniform();
    return u < 0.5 ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
  }

  /// Uniform integer in [0, bound), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % bound;
  }

 private:
  static constexpr double kTwoPi_ = 6.283185307179586476925286766559;
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace sclasso
