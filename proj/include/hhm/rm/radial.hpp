#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "hhm/core/grids.hpp"
#include "hhm/rm/models.hpp"
#include "hhm/rm/numerov.hpp"

namespace hhm {

/// Reduced radial function chi(s) = sqrt(4 pi) s psi(s) of an l = 0 state,
/// so that sum_j w_j |chi_j|^2 = 4 pi int |psi|^2 s^2 ds = 1.
struct RadialWavefunction {
  RadialGrid grid;
  std::vector<complex> chi;  // chi[0] = chi[n-1] = 0 (Dirichlet)
  double mass;

  double norm() const;
  /// <s^2> = sum_j w_j |chi_j|^2 s_j^2.
  double mean_s2() const;
  /// |psi(s_j)|^2 including the s -> 0 limit.
  std::vector<double> density() const;
};

struct GroundState {
  double energy;
  RadialWavefunction wavefunction;
  int iterations;
};

/// Snapshots of a propagated radial wavefunction.
struct WavefunctionTrajectory {
  RadialGrid grid;
  TimeGrid times;  // snapshot grid
  double mass;
  std::vector<std::vector<complex>> chi;

  RadialWavefunction at(std::size_t k) const { return {grid, chi[k], mass}; }
};

/// Fills V(s_j, t) for the interior nodes s_1..s_{n-2}.
using PotentialFn = std::function<void(double t, std::span<const double> s, std::span<double> v)>;

/// V(s, t) = (1/2) mass omega(t)^2 s^2 + u(s).
PotentialFn relative_motion_potential(const InteractionSpec& u, const FrequencyProtocol& w,
                                      double mass);

struct EigenOptions {
  int max_iterations = 2000;
  double tolerance = 1e-14;
};

/// Lowest eigenpair of the discretized radial Hamiltonian with Dirichlet
/// ends, by shifted inverse iteration. The result is real, nonnegative and
/// normalized.
GroundState solve_ground_state(const InteractionSpec& u, double omega0, double mass,
                               const RadialGrid& grid, EigenOptions options = {});

/// Same, for an arbitrary static potential tabulated on all grid nodes.
GroundState solve_ground_state(std::span<const double> potential, double mass,
                               const RadialGrid& grid, EigenOptions options = {});

/// Interior-node Numerov Hamiltonian for `grid` with the given potential.
NumerovHamiltonian radial_hamiltonian(const RadialGrid& grid, double mass,
                                      std::span<const double> potential_all_nodes);

struct PropagationOptions {
  std::size_t stride = 1;
  double norm_tolerance = 1e-6;
};

/// Crank-Nicolson propagation with the potential evaluated at mid-step.
/// Throws InstabilityError when the norm drifts past `norm_tolerance`.
WavefunctionTrajectory propagate(const RadialWavefunction& psi0, const PotentialFn& potential,
                                 const TimeGrid& times, PropagationOptions options = {});

WavefunctionTrajectory propagate(const RadialWavefunction& psi0, const InteractionSpec& u,
                                 const FrequencyProtocol& w, const TimeGrid& times,
                                 PropagationOptions options = {});

/// <H(t)> of a radial state under a given potential.
double radial_energy(const RadialWavefunction& psi, const PotentialFn& potential, double t);

}  // namespace hhm
