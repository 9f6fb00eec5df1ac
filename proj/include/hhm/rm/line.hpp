#pragma once

#include <functional>
#include <vector>

#include "hhm/core/grids.hpp"
#include "hhm/rm/numerov.hpp"

namespace hhm {

/// Symmetric line grid x_j = -x_max + j h, Dirichlet at both ends.
class LineGrid {
 public:
  LineGrid(double x_max, std::size_t n_points);
  double x_max() const { return x_max_; }
  std::size_t size() const { return n_; }
  double spacing() const { return h_; }
  double x(std::size_t j) const { return -x_max_ + static_cast<double>(j) * h_; }

 private:
  double x_max_;
  std::size_t n_;
  double h_;
};

struct LineWavefunction {
  LineGrid grid;
  std::vector<complex> psi;  // psi[0] = psi[n-1] = 0
  double mass = 1.0;

  double norm() const;  // h * sum |psi|^2
  std::vector<double> density() const;
  double mean_x() const;
};

using LinePotential = std::function<double(double x, double t)>;

struct LineTrajectory {
  LineGrid grid;
  TimeGrid times;  // snapshot grid
  std::vector<std::vector<double>> density;
  std::vector<double> norm;
};

/// Ground state of a static line potential by shifted inverse iteration.
LineWavefunction line_ground_state(const LinePotential& v, const LineGrid& grid, double mass = 1.0);

/// Crank-Nicolson on the line with V(x, t) evaluated at mid-step. Keeps
/// densities every `stride` steps.
LineTrajectory propagate_cartesian_1d(const LineWavefunction& psi0, const LinePotential& v,
                                      const TimeGrid& times, std::size_t stride = 1,
                                      double norm_tolerance = 1e-6);

}  // namespace hhm
