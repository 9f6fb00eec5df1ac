#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hhm {

/// Uniform radial grid r_j = j*h on [0, r_max], origin included.
///
/// Quadrature weights are composite Simpson when the node count is odd and
/// composite trapezoid otherwise; `weight_rule()` reports which one is in use.
class RadialGrid {
 public:
  RadialGrid(double r_max, std::size_t n_points);

  double r_max() const { return r_max_; }
  std::size_t size() const { return r_.size(); }
  double spacing() const { return h_; }
  double r(std::size_t j) const { return r_[j]; }
  std::span<const double> nodes() const { return r_; }
  std::span<const double> weights() const { return w_; }
  bool simpson() const { return simpson_; }
  const char* weight_rule() const { return simpson_ ? "simpson" : "trapezoid"; }

  bool operator==(const RadialGrid& other) const {
    return r_max_ == other.r_max_ && r_.size() == other.r_.size();
  }

 private:
  double r_max_;
  double h_;
  bool simpson_;
  std::vector<double> r_;
  std::vector<double> w_;
};

/// t_k = k*dt, k = 0..n_steps, with t_0 = 0 the ground-state anchor.
class TimeGrid {
 public:
  TimeGrid(double t_final, std::size_t n_steps);

  double t_final() const { return t_final_; }
  std::size_t n_steps() const { return n_steps_; }
  std::size_t n_slices() const { return n_steps_ + 1; }
  double dt() const { return dt_; }
  double t(std::size_t k) const { return static_cast<double>(k) * dt_; }

  /// Snapshot grid keeping every `stride`-th slice. n_steps must divide.
  TimeGrid thinned(std::size_t stride) const;

  bool operator==(const TimeGrid& other) const {
    return t_final_ == other.t_final_ && n_steps_ == other.n_steps_;
  }

 private:
  double t_final_;
  std::size_t n_steps_;
  double dt_;
};

/// Dense row-major (time slice, grid node) array of doubles.
class Field {
 public:
  Field() = default;
  Field(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t k, std::size_t j) { return data_[k * cols_ + j]; }
  double operator()(std::size_t k, std::size_t j) const { return data_[k * cols_ + j]; }
  std::span<double> row(std::size_t k) { return {data_.data() + k * cols_, cols_}; }
  std::span<const double> row(std::size_t k) const { return {data_.data() + k * cols_, cols_}; }
  std::span<const double> flat() const { return data_; }
  std::span<double> flat() { return data_; }

  bool operator==(const Field&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// n(r_j, t_k) for a two-electron system (integrates to 2) or, for the CM
/// factor alone, a one-particle density (integrates to 1).
struct DensityTrajectory {
  RadialGrid grid;
  TimeGrid times;
  Field values;

  DensityTrajectory(RadialGrid g, TimeGrid t)
      : grid(g), times(t), values(t.n_slices(), g.size()) {}
};

/// V(r_j, t_k) with gauge V(0, t) = 0. `mask(k, j)` is 1 where the value is
/// defined; masked entries hold NaN. `one_sided[k]` marks time slices whose
/// time derivative used a one-sided stencil.
struct PotentialTrajectory {
  RadialGrid grid;
  TimeGrid times;
  Field values;
  Field mask;
  std::vector<bool> one_sided;

  PotentialTrajectory(RadialGrid g, TimeGrid t)
      : grid(g),
        times(t),
        values(t.n_slices(), g.size()),
        mask(t.n_slices(), g.size()),
        one_sided(t.n_slices(), false) {}
};

/// 4*pi * sum_j w_j r_j^2 f_j.
double integrate_radial(std::span<const double> samples, const RadialGrid& grid);

/// Plain sum_j w_j f_j over the radial nodes (no r^2 measure).
double integrate_line(std::span<const double> samples, const RadialGrid& grid);

struct TimeDerivative {
  Field values;
  std::vector<bool> one_sided;  // per slice
};

/// Finite differences in time along the rows of `field`, second-order
/// accurate by default. Interior slices use central stencils, the boundary
/// slices one-sided ones (flagged). Requires at least 3 slices.
/// accuracy = 4 switches to five-point stencils (the two slices at each end
/// are flagged); with fewer than 6 slices it falls back to second order.
TimeDerivative d_dt(const Field& field, const TimeGrid& times, int order, int accuracy = 2);

/// Relative tail check used by the CLI: max_k n(r_max, t_k) / max n.
double tail_ratio(const DensityTrajectory& n);

}  // namespace hhm
