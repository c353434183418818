#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace posevit {

// SplitMix64 (Steele, Lea & Flood, "Fast splittable pseudorandom number
// generators"). 64-bit state, bit-reproducible on every platform, so a seed
// pins every stochastic result in the project. Distributions are derived
// here rather than through <random>, whose outputs are not portable.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound); bound must be nonzero.
  std::uint64_t next_below(std::uint64_t bound) { return next_u64() % bound; }

  // Standard normal via Box-Muller, one fresh (u1, u2) pair per call so a
  // draw never depends on call history.
  double next_normal() {
    double u1;
    do {
      u1 = next_double();
    } while (u1 <= 0.0);
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  // Normal(0, sigma) resampled until |x| <= bound.
  double next_truncated_normal(double sigma, double bound) {
    while (true) {
      const double x = sigma * next_normal();
      if (std::abs(x) <= bound) return x;
    }
  }

  // Child generator decorrelated from this one; advances this state once.
  SplitMix64 split() { return SplitMix64(next_u64() ^ 0x5851f42d4c957f2dull); }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::uint64_t state_;
};

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Deterministic seed derivation for independent sub-streams.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  SplitMix64 g(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
  return g.next_u64();
}

}  // namespace posevit
