#pragma once

// Deterministic random number utilities. Seeding is splittable: independent
// streams are derived from (seed, stream index) so parallel chunks of work
// reproduce bit-for-bit regardless of scheduling. Gaussian sampling uses an
// explicit Box-Muller transform on pinned 53-bit uniforms, so sequences do
// not depend on the standard library's distribution implementations.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>

namespace optcap {

namespace detail {

// SplitMix64 step: advances the state and returns a mixed output.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Derives a well-separated sub-seed for an independent stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed + (stream + 1) * 0x9e3779b97f4a7c15ULL;
  return detail::splitmix64(state);
}

/// Pseudo-random source with pinned uniform and Gaussian sampling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(mix(seed)) {}

  std::uint64_t seed() const { return seed_; }

  /// Independent stream derived from this generator's base seed.
  Rng derived(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

  /// Uniform double in (0, 1].
  double uniform01() {
    return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
  }

  /// Pair of independent standard normal draws (Box-Muller).
  std::pair<double, double> normal_pair() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    auto [z0, z1] = normal_pair();
    spare_ = z1;
    have_spare_ = true;
    return z0;
  }

  /// Circularly symmetric complex Gaussian with total variance `variance`:
  /// independent real and imaginary parts, each of variance `variance / 2`.
  std::complex<double> complex_normal(double variance) {
    auto [z0, z1] = normal_pair();
    const double s = std::sqrt(0.5 * variance);
    return {s * z0, s * z1};
  }

 private:
  static std::uint64_t mix(std::uint64_t seed) {
    std::uint64_t state = seed;
    return detail::splitmix64(state);
  }

  std::uint64_t seed_;
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace optcap
