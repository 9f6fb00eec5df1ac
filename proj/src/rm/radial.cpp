#include "hhm/rm/radial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hhm/core/errors.hpp"

namespace hhm {

double RadialWavefunction::norm() const {
  const auto w = grid.weights();
  double s = 0.0;
  for (std::size_t j = 0; j < chi.size(); ++j) s += w[j] * std::norm(chi[j]);
  return s;
}

double RadialWavefunction::mean_s2() const {
  const auto w = grid.weights();
  double s = 0.0;
  for (std::size_t j = 0; j < chi.size(); ++j) s += w[j] * std::norm(chi[j]) * grid.r(j) * grid.r(j);
  return s;
}

std::vector<double> RadialWavefunction::density() const {
  std::vector<double> rho(chi.size());
  const double c = 1.0 / (4.0 * std::numbers::pi);
  for (std::size_t j = 1; j < chi.size(); ++j) rho[j] = c * std::norm(chi[j]) / (grid.r(j) * grid.r(j));
  // even extrapolation in s^2 through s = h, 2h, 3h
  rho[0] = 1.5 * rho[1] - 0.6 * rho[2] + 0.1 * rho[3];
  return rho;
}

PotentialFn relative_motion_potential(const InteractionSpec& u, const FrequencyProtocol& w,
                                      double mass) {
  return [u, w, mass](double t, std::span<const double> s, std::span<double> v) {
    const double k = 0.5 * mass * w.omega_sq(t);
    for (std::size_t i = 0; i < s.size(); ++i) v[i] = k * s[i] * s[i] + u(s[i]);
  };
}

NumerovHamiltonian radial_hamiltonian(const RadialGrid& grid, double mass,
                                      std::span<const double> potential_all_nodes) {
  if (potential_all_nodes.size() != grid.size())
    throw InputShapeError("radial_hamiltonian: potential length mismatch");
  NumerovHamiltonian H(grid.size() - 2, grid.spacing(), mass);
  H.set_potential(potential_all_nodes.subspan(1, grid.size() - 2));
  return H;
}

namespace {

GroundState to_ground_state(InteriorEigenpair pair, const RadialGrid& grid, double mass) {
  RadialWavefunction psi{grid, std::vector<complex>(grid.size(), 0.0), mass};
  for (std::size_t i = 0; i < pair.vector.size(); ++i) psi.chi[i + 1] = std::max(0.0, pair.vector[i]);
  const double nrm = std::sqrt(psi.norm());
  for (auto& c : psi.chi) c /= nrm;
  return {pair.energy, std::move(psi), pair.iterations};
}

}  // namespace

GroundState solve_ground_state(std::span<const double> potential, double mass,
                               const RadialGrid& grid, EigenOptions options) {
  auto H = radial_hamiltonian(grid, mass, potential);
  return to_ground_state(lowest_eigenpair(H, options.max_iterations, options.tolerance), grid, mass);
}

GroundState solve_ground_state(const InteractionSpec& u, double omega0, double mass,
                               const RadialGrid& grid, EigenOptions options) {
  if (!(omega0 > 0.0)) throw ModelInvalidError("ground state: omega0 must be > 0");
  if (u.kind == InteractionSpec::Kind::moshinsky &&
      !(omega0 * omega0 - u.force_constant / mass > 0.0))
    throw ModelInvalidError("ground state: moshinsky omega0^2 - K/mu <= 0, potential unbound");
  std::vector<double> v(grid.size(), 0.0);
  auto fill = relative_motion_potential(u, FrequencyProtocol::constant(omega0), mass);
  fill(0.0, grid.nodes().subspan(1, grid.size() - 2), std::span<double>(v).subspan(1, grid.size() - 2));
  return solve_ground_state(v, mass, grid, options);
}

WavefunctionTrajectory propagate(const RadialWavefunction& psi0, const PotentialFn& potential,
                                 const TimeGrid& times, PropagationOptions options) {
  const RadialGrid& grid = psi0.grid;
  const std::size_t n = grid.size() - 2;
  const TimeGrid snaps = times.thinned(options.stride);

  NumerovHamiltonian H(n, grid.spacing(), psi0.mass);
  const auto s = grid.nodes().subspan(1, n);
  std::vector<double> v(n);
  std::vector<complex> x(psi0.chi.begin() + 1, psi0.chi.end() - 1);

  const double norm0 = psi0.norm();
  if (std::abs(norm0 - 1.0) > 1e-8) throw InputShapeError("propagate: initial state not normalized");

  WavefunctionTrajectory traj{grid, snaps, psi0.mass, {}};
  traj.chi.reserve(snaps.n_slices());
  traj.chi.push_back(psi0.chi);

  RadialWavefunction probe{grid, psi0.chi, psi0.mass};
  const double dt = times.dt();
  for (std::size_t k = 0; k < times.n_steps(); ++k) {
    potential(times.t(k) + 0.5 * dt, s, v);
    H.set_potential(v);
    H.crank_nicolson_step(x, dt);
    if ((k + 1) % options.stride == 0) {
      std::copy(x.begin(), x.end(), probe.chi.begin() + 1);
      const double nrm = probe.norm();
      if (!std::isfinite(nrm) || std::abs(nrm - norm0) > options.norm_tolerance) {
        std::ostringstream os;
        os << "propagate: norm drifted to " << nrm << " at t = " << times.t(k + 1)
           << "; reduce dt";
        throw InstabilityError(os.str());
      }
      traj.chi.push_back(probe.chi);
    }
  }
  return traj;
}

WavefunctionTrajectory propagate(const RadialWavefunction& psi0, const InteractionSpec& u,
                                 const FrequencyProtocol& w, const TimeGrid& times,
                                 PropagationOptions options) {
  require_bound_relative_motion(u, w, psi0.mass, times.t_final());
  return propagate(psi0, relative_motion_potential(u, w, psi0.mass), times, options);
}

double radial_energy(const RadialWavefunction& psi, const PotentialFn& potential, double t) {
  const std::size_t n = psi.grid.size() - 2;
  NumerovHamiltonian H(n, psi.grid.spacing(), psi.mass);
  std::vector<double> v(n);
  potential(t, psi.grid.nodes().subspan(1, n), v);
  H.set_potential(v);
  std::vector<complex> x(psi.chi.begin() + 1, psi.chi.end() - 1);
  return H.expectation(x);
}

}  // namespace hhm
