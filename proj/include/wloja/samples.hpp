#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "wloja/measures.hpp"

namespace wloja {

constexpr int perturbation_modes = 3;
constexpr double perturbation_amplitude = 0.3;

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Normalised exp(-x^2 / 2 + sum_k a_k sin(k x)), k = 1..3.
template <typename Scalar>
GridMeasure<Scalar> perturbed_gaussian(const Grid1D<Scalar>& grid, const std::array<Scalar, perturbation_modes>& a) {
  const ArrayX<Scalar> x = grid.centers();
  ArrayX<Scalar> exponent = Scalar(-0.5) * x.square();
  for (int k = 0; k < perturbation_modes; ++k) exponent += a[k] * (Scalar(k + 1) * x).sin();
  return normalize(exponent.exp(), grid);
}

/// `count` perturbed Gaussians with a_k uniform in [-0.3, 0.3], drawn in order
/// a_1, a_2, a_3 per sample from std::mt19937_64 seeded with `seed`.
template <typename Scalar>
std::vector<GridMeasure<Scalar>> perturbed_gaussians(const Grid1D<Scalar>& grid, std::size_t count,
                                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<GridMeasure<Scalar>> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    std::array<Scalar, perturbation_modes> a{};
    for (auto& ak : a) ak = Scalar(perturbation_amplitude * (2 * unit_uniform(rng) - 1));
    out.push_back(perturbed_gaussian(grid, a));
  }
  return out;
}

}  // namespace wloja
