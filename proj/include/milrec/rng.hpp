#pragma once

#include <cmath>
#include <cstdint>

namespace milrec {

// Counter-based deterministic PRNG.
//
// Output i is the splitmix64 finalizer (Steele/Lea/Flood gamma and mixing
// constants, as published in Vigna's splitmix64.c) applied to
// seed + i * 0x9E3779B97F4A7C15. The state is just (seed, counter), so a
// stream can be reproduced from the seed alone, in any language, without
// replaying draws. Substreams are derived by re-keying the seed through the
// same finalizer, which lets callers pre-split independent streams per
// (iteration, batch slot) and keep results identical for any thread count.
class Rng {
 public:
  Rng() = default;
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n >= 1. Plain modulo: the bias is below
  // n/2^64 and a fixed single draw per call keeps streams easy to reproduce.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  // Uniform in [-amplitude, amplitude].
  double next_uniform_sym(double amplitude) {
    return (2.0 * next_double() - 1.0) * amplitude;
  }

  // One N(0, stddev^2) sample via Box-Muller; consumes exactly two draws
  // (the sine companion is discarded).
  double next_normal(double stddev) {
    double u1 = 1.0 - next_double();  // (0, 1]
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    return stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  // Derives a sub-seed; mix(mix(s, a), b) != mix(mix(s, b), a), so paths of
  // tags give distinct streams.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t z = seed ^ (tag + 0x9E3779B97F4A7C15ULL + (seed << 6) + (seed >> 2));
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Independent stream keyed off this rng's seed; does not consume draws.
  Rng substream(std::uint64_t tag) const { return Rng(mix(seed_, tag)); }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace milrec
