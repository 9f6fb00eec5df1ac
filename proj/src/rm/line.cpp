#include "hhm/rm/line.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hhm/core/errors.hpp"

namespace hhm {

LineGrid::LineGrid(double x_max, std::size_t n_points) : x_max_(x_max), n_(n_points) {
  if (!(x_max > 0.0)) throw InputShapeError("line grid: x_max must be positive");
  if (n_points < 16) throw InputShapeError("line grid: need at least 16 points");
  h_ = 2.0 * x_max / static_cast<double>(n_points - 1);
}

double LineWavefunction::norm() const {
  double s = 0.0;
  for (const auto& c : psi) s += std::norm(c);
  return s * grid.spacing();
}

std::vector<double> LineWavefunction::density() const {
  std::vector<double> n(psi.size());
  for (std::size_t j = 0; j < psi.size(); ++j) n[j] = std::norm(psi[j]);
  return n;
}

double LineWavefunction::mean_x() const {
  double s = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j) s += std::norm(psi[j]) * grid.x(j);
  return s * grid.spacing();
}

LineWavefunction line_ground_state(const LinePotential& v, const LineGrid& grid, double mass) {
  const std::size_t n = grid.size() - 2;
  NumerovHamiltonian H(n, grid.spacing(), mass);
  std::vector<double> pot(n);
  for (std::size_t i = 0; i < n; ++i) pot[i] = v(grid.x(i + 1), 0.0);
  H.set_potential(pot);

  auto pair = lowest_eigenpair(H, 4000);
  const auto& x = pair.vector;
  LineWavefunction psi{grid, std::vector<complex>(grid.size(), 0.0), mass};
  for (std::size_t i = 0; i < n; ++i) psi.psi[i + 1] = std::max(0.0, x[i]);
  const double nrm = std::sqrt(psi.norm());
  for (auto& c : psi.psi) c /= nrm;
  return psi;
}

LineTrajectory propagate_cartesian_1d(const LineWavefunction& psi0, const LinePotential& v,
                                      const TimeGrid& times, std::size_t stride,
                                      double norm_tolerance) {
  const LineGrid& grid = psi0.grid;
  const std::size_t n = grid.size() - 2;
  const double norm0 = psi0.norm();
  if (std::abs(norm0 - 1.0) > 1e-8) throw InputShapeError("propagate_cartesian_1d: state not normalized");

  NumerovHamiltonian H(n, grid.spacing(), psi0.mass);
  std::vector<double> pot(n);
  std::vector<complex> x(psi0.psi.begin() + 1, psi0.psi.end() - 1);
  LineTrajectory traj{grid, times.thinned(stride), {}, {}};
  traj.density.push_back(psi0.density());
  traj.norm.push_back(norm0);

  LineWavefunction probe = psi0;
  const double dt = times.dt();
  for (std::size_t k = 0; k < times.n_steps(); ++k) {
    const double tm = times.t(k) + 0.5 * dt;
    for (std::size_t i = 0; i < n; ++i) pot[i] = v(grid.x(i + 1), tm);
    H.set_potential(pot);
    H.crank_nicolson_step(x, dt);
    if ((k + 1) % stride == 0) {
      std::copy(x.begin(), x.end(), probe.psi.begin() + 1);
      const double nrm = probe.norm();
      if (!std::isfinite(nrm) || std::abs(nrm - norm0) > norm_tolerance) {
        std::ostringstream os;
        os << "propagate_cartesian_1d: norm drifted to " << nrm << "; reduce dt";
        throw InstabilityError(os.str());
      }
      traj.density.push_back(probe.density());
      traj.norm.push_back(nrm);
    }
  }
  return traj;
}

}  // namespace hhm
