#pragma once

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "hhm/cm/ermakov.hpp"
#include "hhm/core/grids.hpp"
#include "hhm/ks/inversion.hpp"
#include "hhm/rm/line.hpp"
#include "hhm/rm/models.hpp"
#include "hhm/rm/radial.hpp"

namespace hhm {

struct ResidualOptions {
  double floor = 1e-8;  // evaluate where n > floor * max n (contiguous from 0)
  double r_eval = std::numeric_limits<double>::infinity();
  int order = 4;          // radial stencils
  int time_accuracy = 2;  // d_dt stencils
  unsigned jobs = 1;
};

/// LHS - RHS of an identity on (t_k, r_j); NaN off the mask.
struct ResidualField {
  std::string identity;
  RadialGrid grid;
  TimeGrid times;
  Field residual;
  Field mask;
  std::vector<double> l2;    // per slice, sqrt(4 pi int r^2 res^2 dr) over the mask
  std::vector<double> linf;  // per slice
  std::vector<bool> one_sided;

  /// Largest per-slice norm, optionally ignoring slices with one-sided time stencils.
  double max_l2(bool skip_one_sided = true) const;
  double max_linf(bool skip_one_sided = true) const;
};

/// Radial component of z = 2 div t (t_ab the kinetic-energy-density tensor,
/// quarter-sum convention: t_ab = (1/4)(d_a d'_b + d_b d'_a) rho_1).
struct KineticVectorField {
  std::string variant;  // "noninteracting" or "interacting"
  RadialGrid grid;
  TimeGrid times;
  Field z;
  Field mask;
  std::vector<bool> one_sided;
};

/// dn/dt + (1/r^2) d(r^2 n v)/dr.
ResidualField continuity_residual(const DensityTrajectory& n, const VelocityField& v,
                                  ResidualOptions options = {});

/// Doubly occupied orbital: tau = |phi'|^2 = amp'^2 + amp^2 v^2 and
/// z_r = 2 (tau' + 2 tau / r).
KineticVectorField kinetic_vector_field(const KSOrbital& orbital, ResidualOptions options = {});

/// Real-orbital form from the density alone: tau = n'^2 / (8 n).
KineticVectorField kinetic_vector_field_static(const DensityTrajectory& n, ResidualOptions options = {});

/// V(r, t) = omega(t)^2 r^2 / 2 on every node (mask = 1).
PotentialTrajectory external_potential(const FrequencyProtocol& w, const RadialGrid& grid,
                                       const TimeGrid& times);

/// d^2n/dt^2 + (1/4) lap^2 n - div z_s - div(n grad V).
ResidualField dvt_residual_ks(const DensityTrajectory& n, const KineticVectorField& z_s,
                              const PotentialTrajectory& V, ResidualOptions options = {});

/// Quadrature over the relative coordinate (s, cos theta) at fixed r.
struct PairQuadrature {
  int panels = 4;  // Gauss-Legendre panels in cos theta
  int order = 16;
  unsigned jobs = 1;
  double r_cut = std::numeric_limits<double>::infinity();  // outputs stay zero past this radius
};

/// Pair-force density F(r) = int rho_2(r, r') grad_r u dr' (rho_2 = 2 |Psi|^2)
/// for u = -(1/2) K |r - r'|^2, and its divergence, from the separable
/// CM x RM wavefunction. Other interactions: UnsupportedScopeError.
struct PairForceTerm {
  RadialGrid grid;
  TimeGrid times;
  Field force;       // radial component
  Field divergence;  // evaluated analytically under the integral
};

PairForceTerm interaction_force_term(const WidthTrajectory& width, const WavefunctionTrajectory& rm,
                                     const InteractionSpec& u, const RadialGrid& grid,
                                     PairQuadrature quad = {});

/// Interacting z_r from the one-body density matrix of the separable
/// wavefunction (Gaussian CM with phase kappa = -1/a^2 + i M a'/a, numerical RM).
KineticVectorField interacting_kinetic_vector_field(const WidthTrajectory& width,
                                                    const WavefunctionTrajectory& rm,
                                                    const RadialGrid& grid, PairQuadrature quad = {},
                                                    ResidualOptions options = {});

struct InteractingTerms {
  KineticVectorField z;
  PairForceTerm force;
};

/// Both of the above from one pass over the pair quadrature.
InteractingTerms interacting_terms(const WidthTrajectory& width, const WavefunctionTrajectory& rm,
                                   const InteractionSpec& u, const RadialGrid& grid, PairQuadrature quad = {});

/// d^2n/dt^2 + (1/4) lap^2 n - div z - div(n grad V_ext) - div F.
ResidualField dvt_residual_interacting(const DensityTrajectory& n, const KineticVectorField& z,
                                       const PairForceTerm& force, const PotentialTrajectory& V_ext,
                                       ResidualOptions options = {});

/// Per-slice norms as JSON (the field itself is not included).
void write_residual_report(const std::filesystem::path& json, const ResidualField& r);

struct ConvergenceRow {
  double h;
  double dt;
  double l2;
};

/// CSV `h,dt,l2,order`; order is log2 of the ratio to the previous row
/// (empty on the first).
void write_convergence_csv(const std::filesystem::path& csv, const std::vector<ConvergenceRow>& rows);

struct HptOptions {
  double x_max = 10.0;
  std::size_t n_points = 1001;
  double anharmonic = 0.0;  // adds anharmonic * x^4 to the propagating potential
  std::size_t stride = 10;  // compare every stride-th step
};

struct HptReport {
  std::vector<double> times;
  std::vector<double> deviation;  // max_x |n(x, t) - n_0(x - x_cl(t))|
  std::vector<double> x_cl;
  double max_deviation = 0.0;
  std::vector<std::string> warnings;
};

/// 1D ground state of omega0^2 x^2 / 2 driven by -E0 sin(Omega t) x, compared
/// with the rigidly translated initial density along the classical path.
HptReport hpt_check(double omega0, double E0, double Omega, const TimeGrid& times,
                    HptOptions options = {});

}  // namespace hhm
