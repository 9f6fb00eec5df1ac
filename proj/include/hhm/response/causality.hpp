#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "hhm/core/grids.hpp"

namespace hhm {

/// chi(t_k, t_k') as d x d blocks over a spatial basis. Only k' <= k is
/// stored; the upper time triangle has no storage and reads as exact zero.
class CausalKernel {
 public:
  CausalKernel(TimeGrid times, std::size_t d);

  const TimeGrid& times() const { return times_; }
  std::size_t dim() const { return d_; }
  std::size_t n_slices() const { return times_.n_slices(); }

  /// Row-major d x d block, k' <= k only.
  std::span<double> block(std::size_t k, std::size_t kp);
  std::span<const double> block(std::size_t k, std::size_t kp) const;
  double operator()(std::size_t k, std::size_t kp, std::size_t i = 0, std::size_t j = 0) const;
  /// Number of stored doubles, d^2 n (n + 1) / 2.
  std::size_t stored() const { return data_.size(); }

 private:
  std::size_t offset(std::size_t k, std::size_t kp) const;
  TimeGrid times_;
  std::size_t d_;
  std::vector<double> data_;
};

/// Drive or response trajectory: rows are time slices, columns basis sites.
using Trajectory = Field;

/// dn[k] = dt sum_{k' <= k} chi[k][k'] v[k'] (left rectangle).
Trajectory forward_response(const CausalKernel& chi, const Trajectory& v);

/// Spherical Hartree matrix V_H(r_j) = sum_j' H[j][j'] dn(r_j') with
/// H[j][j'] = 4 pi r_j'^2 w_j' / max(r_j, r_j'). Row-major d x d, d = grid size.
/// The 0/0 at j = j' = 0 carries zero weight and is set to 0.
std::vector<double> hartree_kernel(const RadialGrid& grid);

struct ModelXCKernel {
  enum class Kind { zero, adiabatic_local };
  Kind kind = Kind::zero;
  double strength = 0.0;  // f_xc dn = strength * dn, same time and site

  static ModelXCKernel zero() { return {}; }
  static ModelXCKernel adiabatic_local(double g) { return {Kind::adiabatic_local, g}; }
};

struct DysonOptions {
  double tolerance = 1e-10;  // sup-norm change of the equal-time fixed point
  int max_iterations = 500;
};

struct DysonResult {
  Trajectory dn;
  Trajectory dV;  // v_ext + H dn + f_xc dn
  int max_iterations_used = 0;
};

/// Slice-by-slice fixed point dn = chi_s (v_ext + H dn + f_xc dn). `hartree`
/// empty means no Hartree term. Throws DivergenceError (with a spectral
/// radius estimate) when the equal-time iteration does not converge.
DysonResult solve_dyson(const CausalKernel& chi_s, const std::vector<double>& hartree,
                        const ModelXCKernel& fxc, const Trajectory& v_ext, DysonOptions options = {});

struct KernelDiagonalK {
  TimeGrid times;
  std::size_t d;
  std::vector<std::vector<double>> K;  // d x d per slice
  std::vector<bool> copied;            // K[0] is copied from K[1]
  std::vector<bool> singular;
  bool any_singular() const;
};

/// K[k] = (chi[k][k] - chi[k][k-1]) / dt, the causal-side derivative in t'.
KernelDiagonalK extract_K(const CausalKernel& chi, double singular_tol = 1e-12);

struct VolterraOptions {
  bool resolvent = true;
  double consistency_tol = 1e-3;  // relative sup-norm misfit of forward(v) against dn
};

struct VolterraResult {
  Trajectory v;
  CausalKernel R;               // resolvent, strictly lower in time
  Trajectory source;            // g = (-K + dt C_kk)^-1 d^2 dn/dt^2
  std::vector<bool> flagged;    // slices built with one-sided stencils
  double misfit = 0.0;          // max |forward(v) - dn| / max |dn|
  bool consistent = true;
};

/// Second-kind equation d^2dn/dt^2 = -K v + int d^2chi/dt^2 v dt', solved by
/// forward substitution; dn(0) = d_t dn(0) = 0 is imposed. Throws
/// SingularKernelError when K is singular on the range.
VolterraResult volterra_invert(const CausalKernel& chi, const Trajectory& dn, VolterraOptions options = {});

/// v = g + dt sum_{k' < k} R[k][k'] g[k'].
Trajectory apply_resolvent(const CausalKernel& R, const Trajectory& g);

/// Noninteracting response of one doubly occupied orbital (mass 1) in the
/// well omega^2 r^2 / 2, sampled on every `basis_stride`-th radial node.
struct ChiScenario {
  double omega = 1.0;
  double r_max = 10.0;
  std::size_t n_points = 501;
  double t_final = 2.0;
  std::size_t n_steps = 400;
  std::size_t basis_stride = 10;
  double bump_width = 0.1;  // Gaussian width of the spatial delta-bump
  unsigned jobs = 1;
};

struct Perturbation {
  std::size_t site = 0;   // basis index j'
  std::size_t slice = 0;  // time index k'
  double epsilon = 1e-4;
};

struct ChiColumn {
  TimeGrid times;
  std::vector<double> basis_r;
  Trajectory column;  // chi[k][k'](:, j')
  double linearity = 0.0;  // relative change between eps and eps/2
};

/// Impulse eps/dt applied over step k' -> k'+1 with the unit-height bump at
/// the basis site; central (+/- eps) difference of the densities. Throws
/// StepSizeError when eps and eps/2 disagree by more than 10%.
ChiColumn numerical_chi_s(const ChiScenario& scenario, const Perturbation& p);

/// JSON header (d, n_steps, dt, t_final) plus CSV `k,kp,i,j,value` over the
/// stored lower triangle only.
void write_kernel(const std::filesystem::path& csv, const CausalKernel& chi);
CausalKernel read_kernel(const std::filesystem::path& csv);

}  // namespace hhm
