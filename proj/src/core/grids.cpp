#include "hhm/core/grids.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hhm/core/errors.hpp"

namespace hhm {

RadialGrid::RadialGrid(double r_max, std::size_t n_points) : r_max_(r_max) {
  if (!(r_max > 0.0)) throw InputShapeError("radial grid: r_max must be positive");
  if (n_points < 16) throw InputShapeError("radial grid: need at least 16 points");
  h_ = r_max / static_cast<double>(n_points - 1);
  simpson_ = (n_points % 2) == 1;
  r_.resize(n_points);
  w_.assign(n_points, h_);
  for (std::size_t j = 0; j < n_points; ++j) r_[j] = static_cast<double>(j) * h_;
  if (simpson_) {
    for (std::size_t j = 1; j + 1 < n_points; ++j) w_[j] = (j % 2 == 1 ? 4.0 : 2.0) * h_ / 3.0;
    w_.front() = w_.back() = h_ / 3.0;
  } else {
    w_.front() = w_.back() = 0.5 * h_;
  }
}

TimeGrid::TimeGrid(double t_final, std::size_t n_steps) : t_final_(t_final), n_steps_(n_steps) {
  if (!(t_final > 0.0)) throw InputShapeError("time grid: t_final must be positive");
  if (n_steps == 0) throw InputShapeError("time grid: n_steps must be positive");
  dt_ = t_final / static_cast<double>(n_steps);
}

TimeGrid TimeGrid::thinned(std::size_t stride) const {
  if (stride == 0 || n_steps_ % stride != 0)
    throw InputShapeError("time grid: stride must divide n_steps");
  return TimeGrid(t_final_, n_steps_ / stride);
}

double integrate_radial(std::span<const double> samples, const RadialGrid& grid) {
  if (samples.size() != grid.size())
    throw InputShapeError("integrate_radial: samples length does not match grid");
  const auto w = grid.weights();
  double sum = 0.0;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const double r = grid.r(j);
    sum += w[j] * r * r * samples[j];
  }
  return 4.0 * std::numbers::pi * sum;
}

double integrate_line(std::span<const double> samples, const RadialGrid& grid) {
  if (samples.size() != grid.size())
    throw InputShapeError("integrate_line: samples length does not match grid");
  const auto w = grid.weights();
  double sum = 0.0;
  for (std::size_t j = 0; j < samples.size(); ++j) sum += w[j] * samples[j];
  return sum;
}

namespace {

// Fourth-order stencils: centred five-point rule inside, off-centre rules on
// the two slices at each end (coefficients for f_0..f_5 from the boundary).
TimeDerivative d_dt4(const Field& field, const TimeGrid& times, int order) {
  const std::size_t nk = field.rows(), nj = field.cols(), last = nk - 1;
  TimeDerivative out{Field(nk, nj), std::vector<bool>(nk, false)};
  out.one_sided[0] = out.one_sided[1] = out.one_sided[last - 1] = out.one_sided[last] = true;
  const double dt = times.dt();
  const double s = order == 1 ? 1.0 / (12.0 * dt) : 1.0 / (12.0 * dt * dt);
  static constexpr double c1[5] = {1.0, -8.0, 0.0, 8.0, -1.0};
  static constexpr double c2[5] = {-1.0, 16.0, -30.0, 16.0, -1.0};
  static constexpr double e1[2][6] = {{-25.0, 48.0, -36.0, 16.0, -3.0, 0.0},
                                      {-3.0, -10.0, 18.0, -6.0, 1.0, 0.0}};
  static constexpr double e2[2][6] = {{45.0, -154.0, 214.0, -156.0, 61.0, -10.0},
                                      {10.0, -15.0, -4.0, 14.0, -6.0, 1.0}};
  const double* c = order == 1 ? c1 : c2;
  for (std::size_t k = 2; k + 2 <= last; ++k)
    for (std::size_t j = 0; j < nj; ++j) {
      double acc = 0.0;
      for (int m = 0; m < 5; ++m) acc += c[m] * field(k + m - 2, j);
      out.values(k, j) = acc * s;
    }
  // the first derivative flips sign when the stencil is mirrored
  const double mirror = order == 1 ? -1.0 : 1.0;
  for (std::size_t b = 0; b < 2; ++b) {
    const double* e = order == 1 ? e1[b] : e2[b];
    for (std::size_t j = 0; j < nj; ++j) {
      double lo = 0.0, hi = 0.0;
      for (std::size_t m = 0; m < 6; ++m) {
        lo += e[m] * field(m, j);
        hi += e[m] * field(last - m, j);
      }
      out.values(b, j) = lo * s;
      out.values(last - b, j) = mirror * hi * s;
    }
  }
  return out;
}

}  // namespace

TimeDerivative d_dt(const Field& field, const TimeGrid& times, int order, int accuracy) {
  const std::size_t nk = field.rows();
  const std::size_t nj = field.cols();
  if (nk < 3) throw InsufficientDataError("d_dt: need at least 3 time slices");
  if (nk != times.n_slices()) throw InputShapeError("d_dt: field rows do not match time grid");
  if (order != 1 && order != 2) throw InputShapeError("d_dt: order must be 1 or 2");
  if (accuracy != 2 && accuracy != 4) throw InputShapeError("d_dt: accuracy must be 2 or 4");
  if (accuracy == 4 && nk >= 6) return d_dt4(field, times, order);

  TimeDerivative out{Field(nk, nj), std::vector<bool>(nk, false)};
  out.one_sided.front() = out.one_sided.back() = true;
  const double dt = times.dt();
  const std::size_t last = nk - 1;

  if (order == 1) {
    const double s = 1.0 / (2.0 * dt);
    for (std::size_t k = 1; k < last; ++k)
      for (std::size_t j = 0; j < nj; ++j)
        out.values(k, j) = (field(k + 1, j) - field(k - 1, j)) * s;
    for (std::size_t j = 0; j < nj; ++j) {
      out.values(0, j) = (-3.0 * field(0, j) + 4.0 * field(1, j) - field(2, j)) * s;
      out.values(last, j) =
          (3.0 * field(last, j) - 4.0 * field(last - 1, j) + field(last - 2, j)) * s;
    }
    return out;
  }

  const double s = 1.0 / (dt * dt);
  for (std::size_t k = 1; k < last; ++k)
    for (std::size_t j = 0; j < nj; ++j)
      out.values(k, j) = (field(k + 1, j) - 2.0 * field(k, j) + field(k - 1, j)) * s;
  for (std::size_t j = 0; j < nj; ++j) {
    if (nk >= 4) {
      out.values(0, j) =
          (2.0 * field(0, j) - 5.0 * field(1, j) + 4.0 * field(2, j) - field(3, j)) * s;
      out.values(last, j) = (2.0 * field(last, j) - 5.0 * field(last - 1, j) +
                             4.0 * field(last - 2, j) - field(last - 3, j)) *
                            s;
    } else {
      out.values(0, j) = out.values(1, j);
      out.values(last, j) = out.values(1, j);
    }
  }
  return out;
}

double tail_ratio(const DensityTrajectory& n) {
  double peak = 0.0;
  double tail = 0.0;
  const std::size_t last = n.grid.size() - 1;
  for (std::size_t k = 0; k < n.values.rows(); ++k) {
    for (double v : n.values.row(k)) peak = std::max(peak, std::abs(v));
    tail = std::max(tail, std::abs(n.values(k, last)));
  }
  return peak > 0.0 ? tail / peak : 0.0;
}

}  // namespace hhm
