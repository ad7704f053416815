#pragma once

// Portable seeded random source.
//
// Engine: xoshiro256** (Blackman & Vigna), state seeded by four successive
// SplitMix64 outputs of the 64-bit seed. The variate transforms below are
// written out here rather than taken from <random>, whose distributions are
// implementation-defined; only the engine bits and libm's log/sqrt/cos feed
// the results, so sequences match across standard libraries.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "driftgauge/error.hpp"

namespace driftgauge {

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random mantissa bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe to pass to log().
  double uniform_open_zero() noexcept { return 1.0 - uniform(); }

  // Box-Muller, one variate per call (the sine pair is discarded so that
  // the stream position depends only on the number of calls).
  double normal(double mean = 0.0, double stddev = 1.0) noexcept {
    const double u1 = uniform_open_zero();
    const double u2 = uniform();
    const double z =
        std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + stddev * z;
  }

  // Marsaglia-Tsang squeeze for shape >= 1; shape < 1 uses the
  // Gamma(shape + 1) * U^(1/shape) boost.
  double gamma(double shape) {
    if (!(shape > 0.0) || !std::isfinite(shape))
      throw ParameterError("gamma shape must be positive and finite");
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform_open_zero(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = 0.0;
      double v = 0.0;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open_zero();
      if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  std::vector<double> dirichlet(std::span<const double> concentration) {
    std::vector<double> draw(concentration.size());
    double total = 0.0;
    for (std::size_t i = 0; i < draw.size(); ++i) {
      draw[i] = gamma(concentration[i]);
      total += draw[i];
    }
    if (!(total > 0.0)) {
      // Every component underflowed; only reachable for tiny concentrations.
      throw DegenerateError("dirichlet draw underflowed to zero total mass");
    }
    for (auto& x : draw) x /= total;
    return draw;
  }

  // Inverse-CDF draw from a probability vector. Falls back to the last index
  // with positive mass when rounding leaves the cumulative sum short of u.
  std::size_t categorical(std::span<const double> probs) noexcept {
    const double u = uniform();
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      last_positive = i;
      cumulative += probs[i];
      if (u < cumulative) return i;
    }
    return last_positive;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  static constexpr std::uint64_t splitmix64(std::uint64_t& x) noexcept {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace driftgauge
