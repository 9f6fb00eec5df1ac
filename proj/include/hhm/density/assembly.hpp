#pragma once

#include <complex>
#include <filesystem>
#include <span>
#include <vector>

#include "hhm/cm/ermakov.hpp"
#include "hhm/core/grids.hpp"
#include "hhm/rm/models.hpp"
#include "hhm/rm/radial.hpp"

namespace hhm {

/// Gauss-Legendre rule for the y-integral. One panel per interval of the
/// relative-motion grid (the interpolated |psi|^2 is a cubic there), with
/// `order` nodes per panel. The order is doubled on the first slice until
/// two successive estimates agree to `rel_tol`; every `check_every`-th slice
/// is then re-checked against twice that order and a disagreement above
/// `fail_tol` raises QuadratureError.
struct QuadratureSpec {
  int order = 4;
  int max_order = 32;
  double rel_tol = 1e-8;
  double fail_tol = 1e-6;
  std::size_t check_every = 10;
  unsigned jobs = 1;
};

/// n(r) = (8/sqrt(pi)) e^{-r^2/a^2} int_0^Y dy y^2 e^{-y^2/4} |psi_RM(a y)|^2 sinh(x)/x,
/// x = r y / a, Y = s_max / a. Returns the values on `grid`.
std::vector<double> pair_density(double a_cm, const RadialWavefunction& rm, const RadialGrid& grid,
                                 int order);

/// Same, with the order chosen and checked as described for QuadratureSpec.
std::vector<double> static_density(double a_cm, const RadialWavefunction& rm, const RadialGrid& grid,
                                   QuadratureSpec spec = {});

/// Time-dependent two-electron density on the snapshot grid of `rm`. The
/// width trajectory must live on a grid that `rm.times` is a thinning of.
/// Width samples per snapshot interval; throws InputShapeError unless the
/// snapshot grid is a thinning of the width grid.
std::size_t width_stride(const WidthTrajectory& width, const TimeGrid& snapshots, const char* who);

DensityTrajectory assemble_density(const WidthTrajectory& width, const WavefunctionTrajectory& rm,
                                   const RadialGrid& grid, QuadratureSpec spec = {});

struct ScatteringFactor {
  TimeGrid times;
  double k_max;
  std::size_t n_k;
  std::vector<std::complex<double>> values;  // row-major [time][k]

  double k(std::size_t q) const { return k_max * static_cast<double>(q) / static_cast<double>(n_k - 1); }
  std::complex<double> operator()(std::size_t t, std::size_t q) const { return values[t * n_k + q]; }
};

/// f(k, t) = int 4 pi r^2 n(r, t) sin(kr)/(kr) dr on a uniform k-grid [0, k_max].
ScatteringFactor scattering_factor(const DensityTrajectory& n, double k_max, std::size_t n_k);

/// Closed form for a harmonic pair force u = -(1/2) K s^2 (the widths are
/// integrated with steps of at most 1e-3 whatever the spacing of `times`):
/// f = 2 exp(-k^2 a_CM^2 / 4) exp(-k^2 a_RM^2 / 16), with a_CM from the
/// Ermakov equation at M = 2 and a_RM at mu = 1/2 with omega^2 - 2K.
ScatteringFactor moshinsky_scattering_closed_form(const FrequencyProtocol& w, double K,
                                                  double k_max, std::size_t n_k,
                                                  const TimeGrid& times);

/// Inverse transform of the closed form: 2 exp(-r^2/b^2) / (b^3 pi^{3/2}),
/// b^2 = a_CM^2 + a_RM^2 / 4.
DensityTrajectory moshinsky_density_closed_form(const FrequencyProtocol& w, double K,
                                                const RadialGrid& grid, const TimeGrid& times);

/// CSV `t,k,re_f,im_f` with a JSON sidecar.
void write_scattering(const std::filesystem::path& csv, const ScatteringFactor& f);
ScatteringFactor read_scattering(const std::filesystem::path& csv);

}  // namespace hhm
