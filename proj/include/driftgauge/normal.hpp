#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace driftgauge::normal {

inline double cdf(double z) noexcept {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline double sf(double z) noexcept {
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

inline double pdf(double z) noexcept {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

// Mass of N(mean, sd^2) on each bin [edges[i], edges[i+1]). Bins above the
// mean are differenced on the survival function so tail masses keep their
// relative precision. Edges may be +-infinity at the ends.
inline std::vector<double> bin_masses(std::span<const double> edges,
                                      double mean, double sd) {
  std::vector<double> mass(edges.size() - 1);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double lo = (edges[i] - mean) / sd;
    const double hi = (edges[i + 1] - mean) / sd;
    mass[i] = lo >= 0.0 ? sf(lo) - sf(hi) : cdf(hi) - cdf(lo);
    if (mass[i] < 0.0) mass[i] = 0.0;
  }
  return mass;
}

}  // namespace driftgauge::normal
