#pragma once

#include <complex>
#include <filesystem>
#include <vector>

#include "hhm/core/grids.hpp"

namespace hhm {

struct InversionOptions {
  double floor = 1e-8;  // evaluation mask: n > floor * max_r n(r, t)
  // v and alpha are carried further out, to n > support * max n, so that the
  // time derivative of alpha at a moving mask edge never reads a continuation
  double support = 1e-30;
  int order = 4;        // radial stencil order
  int time_accuracy = 4;  // d_dt stencil accuracy
  unsigned jobs = 1;
};

/// Radial velocity v = j / n. The mask is the contiguous block of nodes from
/// the origin on which n exceeds the floor. v is also filled on the wider
/// support block (see InversionOptions) and is 0 beyond it.
struct VelocityField {
  RadialGrid grid;
  TimeGrid times;
  Field v;
  Field mask;  // 1 on the mask, 0 outside
  std::vector<std::size_t> support_edge;  // last node of the support, per slice
  std::vector<bool> one_sided;
};

/// Doubly occupied orbital phi = sqrt(n/2) e^{i alpha}, alpha(0, t) = 0.
struct KSOrbital {
  RadialGrid grid;
  TimeGrid times;
  Field amplitude;
  Field phase;
  Field velocity;  // d alpha / dr, carried over from the continuity solve
  Field mask;
  std::vector<bool> one_sided;

  std::complex<double> phi(std::size_t k, std::size_t j) const {
    return std::polar(amplitude(k, j), phase(k, j));
  }
};

/// v(r, t) = -(1/(r^2 n)) int_0^r dn/dt r'^2 dr'. Past the median radius
/// the equivalent outer integral +int_r^{r_max} is used instead, which keeps
/// the tail free of cancellation and makes the flux through r_max vanish.
VelocityField velocity_field(const DensityTrajectory& n, InversionOptions options = {});

/// alpha(r, t) = int_0^r v dr'.
KSOrbital build_orbital(const DensityTrajectory& n, const VelocityField& v);

/// V = Re[(i d_t phi + (1/2) lap phi) / phi], evaluated in the polar form
/// phi = e^{l + i alpha}:  V = -d_t alpha + (1/2)(l'' + 2 l'/r + l'^2 - v^2),
/// gauge-fixed to V(0, t) = 0. Points off the mask are NaN.
PotentialTrajectory invert_potential(const KSOrbital& orbital, InversionOptions options = {});

struct RoundtripOptions {
  std::size_t substeps = 10;  // propagation steps per potential slice
  double norm_tolerance = 1e-6;
};

struct RoundtripReport {
  std::vector<double> mismatch;  // per slice, ||2|phi|^2 - n|| / ||n||
  double max_mismatch = 0.0;
  double t_worst = 0.0;
  double initial_norm = 0.0;  // int n(r, 0) d^3r / 2 before renormalizing
};

/// Continues a masked potential past the mask edge r_m as V(r_m) (r/r_m)^2
/// (NaN entries are replaced; the mask itself is left untouched).
Field extend_potential(const PotentialTrajectory& V);

/// Propagates phi(r, 0) = sqrt(n(r, 0)/2) (mass 1) under V, linearly
/// interpolated in time and re-gauged to V(0, t) = 0, and compares 2|phi|^2
/// with the target density at every slice of V.
RoundtripReport repropagate_check(const PotentialTrajectory& V, const DensityTrajectory& n_target,
                                  RoundtripOptions options = {});

/// CSV `t,r,V,mask` (missing values written as nan) with a JSON sidecar.
void write_potential(const std::filesystem::path& csv, const PotentialTrajectory& V);
PotentialTrajectory read_potential(const std::filesystem::path& csv);

}  // namespace hhm
