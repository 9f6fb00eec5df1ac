#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hhm/core/grids.hpp"

namespace hhm {

// Radial finite-difference operators on one time slice.
//
// Spherically symmetric scalars are even in r and radial vector components
// are odd, so the stencils near the origin read mirrored ghost values
// f(-r_m) = +/- f(r_m) instead of switching to one-sided formulas. Near r_max
// the stencils become one-sided of the same order.

enum class Parity { even, odd };

/// df/dr, order 2 or 4.
std::vector<double> radial_d1(std::span<const double> f, const RadialGrid& grid, Parity parity,
                              int order = 4);

/// d^2f/dr^2, order 2 or 4.
std::vector<double> radial_d2(std::span<const double> f, const RadialGrid& grid, Parity parity,
                              int order = 4);

/// Laplacian of an even scalar: f'' + 2 f'/r, with 3 f''(0) at the origin.
std::vector<double> radial_laplacian(std::span<const double> f, const RadialGrid& grid,
                                     int order = 4);

/// Divergence of an odd radial vector component: g' + 2 g/r, with 3 g'(0)
/// at the origin.
std::vector<double> radial_divergence(std::span<const double> g, const RadialGrid& grid,
                                      int order = 4);

/// Running integral I(r_j) = int_0^{r_j} f dr (local rule exact for cubics).
/// With a parity the first interval uses the mirrored ghost f(-h) instead
/// of an off-centre rule.
std::vector<double> cumulative_integral(std::span<const double> f, const RadialGrid& grid,
                                        std::optional<Parity> parity = std::nullopt);
/// Same on the first f.size() nodes of a uniform grid with spacing h.
std::vector<double> cumulative_integral(std::span<const double> f, double h,
                                        std::optional<Parity> parity = std::nullopt);

}  // namespace hhm
