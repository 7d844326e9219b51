#pragma once

#include <cstdint>
#include <cmath>

namespace blockdep {

/// Splittable pseudo-random stream (xoshiro256++ state, SplitMix64 seeding).
///
/// Streams are derived, not advanced: `Rng::stream(master, a, b)` mixes the
/// identifiers into a fresh state, so work units indexed by (replication,
/// purpose) can draw independently and reproducibly regardless of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { seed_state(seed); }

  /// Derive the stream labelled `a` (and optionally `b`, `c`) under `master`.
  static Rng stream(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                    std::uint64_t c = 0) {
    std::uint64_t h = master;
    h = split_mix(h + 0x9E3779B97F4A7C15ULL * (a + 1));
    h = split_mix(h ^ (0xBF58476D1CE4E5B9ULL * (b + 1)));
    h = split_mix(h ^ (0x94D049BB133111EBULL * (c + 1)));
    return Rng(h);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1]; safe as a log() argument.
  double uniform01_open_left() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via the polar (Marsaglia) method; caches the pair.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * m;
    has_cached_ = true;
    return u * m;
  }

  /// +1 or -1 with equal probability.
  double rademacher() { return (next_u64() >> 63) ? 1.0 : -1.0; }

  /// Mean-zero unit-variance uniform: (U - 1/2) * sqrt(12).
  double uniform_centered() {
    return (uniform01() - 0.5) * 3.4641016151377544;  // sqrt(12)
  }

  /// Exp(1) - 1: mean zero, unit variance, third moment 2.
  double exponential_centered() {
    return -std::log(uniform01_open_left()) - 1.0;
  }

  /// Chi-square with k > 2 degrees of freedom (Marsaglia-Tsang gamma).
  double chi_square(double k) { return 2.0 * gamma_shape(0.5 * k); }

  /// Student t with nu degrees of freedom (raw, variance nu/(nu-2)).
  double student_t(double nu) {
    const double z = normal();
    const double v = chi_square(nu);
    return z / std::sqrt(v / nu);
  }

  /// Student t standardized to unit variance; requires nu > 2.
  double student_t_unit(double nu) {
    return student_t(nu) / std::sqrt(nu / (nu - 2.0));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  static std::uint64_t split_mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  void seed_state(std::uint64_t seed) {
    std::uint64_t z = seed;
    for (auto& word : s_) {
      z += 0x9E3779B97F4A7C15ULL;
      word = split_mix(z);
    }
    // All-zero state is invalid for xoshiro.
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  // Marsaglia-Tsang for shape alpha >= 1 (alpha = k/2 > 1 in our use).
  double gamma_shape(double alpha) {
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform01_open_left();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  std::uint64_t s_[4];
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace blockdep
