#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

namespace jcr {

/**
 * Deterministic splittable random generator (SplitMix64 core).
 *
 * The standard library distributions are implementation-defined, so every
 * random draw in the library goes through this class to keep experiment
 * outputs byte-identical across toolchains, re-runs, and worker counts.
 * Independent streams are derived from (root seed, stream id, index) with
 * derive(), so parallel trials never share or race a generator.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Derive an independent child seed; mixing is stationary in all arguments.
  static std::uint64_t derive(std::uint64_t root, std::uint64_t stream, std::uint64_t index) {
    std::uint64_t x = root;
    x = mix(x ^ (0x9e3779b97f4a7c15ULL + stream * 0xbf58476d1ce4e5b9ULL));
    x = mix(x ^ (0x94d049bb133111ebULL + index * 0xd6e8feb86659fd93ULL));
    return mix(x);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) without modulo bias (bound >= 1).
  std::uint64_t uniform_below(std::uint64_t bound) {
    const std::uint64_t limit = bound * (~std::uint64_t(0) / bound);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % bound;
  }

  /// Standard normal via Box-Muller (explicit, portable).
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Circular complex Gaussian with E|x|^2 = variance.
  std::complex<double> complex_gaussian(double variance) {
    const double s = std::sqrt(variance / 2.0);
    return {s * gaussian(), s * gaussian()};
  }

  /// First k entries of a Fisher-Yates pass over {0, ..., n-1}.
  std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n, std::uint32_t k) {
    std::vector<std::uint32_t> pool(n);
    for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
    for (std::uint32_t i = 0; i < k; ++i) {
      const std::uint32_t j = i + static_cast<std::uint32_t>(uniform_below(n - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace jcr
