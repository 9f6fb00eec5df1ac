#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "hhm/core/grids.hpp"
#include "hhm/rm/models.hpp"

namespace hhm {

/// Width a(t) of a breathing ground-state Gaussian, on every step of `times`.
struct WidthTrajectory {
  TimeGrid times;
  double mass;
  double omega0;
  std::vector<double> a;
  std::vector<double> adot;

  /// Phase velocity 1 / (M a).
  double phidot(std::size_t k) const { return 1.0 / (mass * a[k]); }
};

using OmegaSqFn = std::function<double(double)>;

/// Integrates a'' + w(t)^2 a = 1 / (M^2 a^3) from a(0) = (M w0)^{-1/2},
/// a'(0) = 0 with classical RK4, w0 being the frequency the state was
/// prepared in (a switch at t = 0 already acts on the first step). Steps that
/// contain one of `breakpoints` are split there, so no RK4 stage straddles a
/// jump in w.
WidthTrajectory solve_ermakov(const OmegaSqFn& omega_sq, double omega0_sq,
                              std::span<const double> breakpoints, double mass,
                              const TimeGrid& times);
WidthTrajectory solve_ermakov(const FrequencyProtocol& w, double mass, const TimeGrid& times);
WidthTrajectory solve_ermakov(const EffectiveFrequency& w, double mass, const TimeGrid& times);

/// (1/2)(a'^2 + w^2 a^2 + 1/(M^2 a^2)); conserved while w is constant.
double ermakov_energy(double a, double adot, double omega_sq, double mass);

/// Lewis invariant (1/2)[(x/a)^2 / M^2 + (a x' - a' x)^2] for a classical
/// trajectory x'' + w(t)^2 x = 0 driven by the same w; conserved for any w(t).
double lewis_invariant(double a, double adot, double x, double xdot, double mass);

/// |psi|^2(c, t) = exp(-c^2/a^2) / (a^3 pi^{3/2}), normalized to one.
DensityTrajectory cm_density(const WidthTrajectory& width, const RadialGrid& grid);

/// CSV `t,a,adot` with a JSON sidecar (mass, omega0, grid).
void write_width(const std::filesystem::path& csv, const WidthTrajectory& width);
WidthTrajectory read_width(const std::filesystem::path& csv);

}  // namespace hhm
