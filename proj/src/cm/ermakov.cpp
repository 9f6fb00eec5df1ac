#include "hhm/cm/ermakov.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "hhm/core/errors.hpp"
#include "hhm/core/io.hpp"

namespace hhm {

namespace {

struct State {
  double a, v;
};

// One RK4 step over [t0, t1]. Stage times are nudged one ulp inside the
// interval so a left- or right-continuous jump at either end is never sampled.
State rk4(const OmegaSqFn& w2, double inv_m2, State y, double t0, double t1) {
  const double h = t1 - t0;
  const double lo = std::nextafter(t0, t1), hi = std::nextafter(t1, t0), mid = t0 + 0.5 * h;
  auto f = [&](double t, State s) {
    return State{s.v, inv_m2 / (s.a * s.a * s.a) - w2(t) * s.a};
  };
  const State k1 = f(lo, y);
  const State k2 = f(mid, {y.a + 0.5 * h * k1.a, y.v + 0.5 * h * k1.v});
  const State k3 = f(mid, {y.a + 0.5 * h * k2.a, y.v + 0.5 * h * k2.v});
  const State k4 = f(hi, {y.a + h * k3.a, y.v + h * k3.v});
  return {y.a + h / 6.0 * (k1.a + 2.0 * k2.a + 2.0 * k3.a + k4.a),
          y.v + h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v)};
}

}  // namespace

WidthTrajectory solve_ermakov(const OmegaSqFn& omega_sq, double w0sq,
                              std::span<const double> breakpoints, double mass,
                              const TimeGrid& times) {
  if (!(mass > 0.0)) throw ModelInvalidError("ermakov: mass must be > 0");
  if (!(w0sq > 0.0)) throw ModelInvalidError("ermakov: omega(0)^2 must be > 0");
  const double w0 = std::sqrt(w0sq);

  std::vector<double> cuts(breakpoints.begin(), breakpoints.end());
  std::sort(cuts.begin(), cuts.end());

  WidthTrajectory out{times, mass, w0, std::vector<double>(times.n_slices()),
                      std::vector<double>(times.n_slices())};
  State y{1.0 / std::sqrt(mass * w0), 0.0};
  const double floor = 1e-10 * y.a;
  const double inv_m2 = 1.0 / (mass * mass);
  out.a[0] = y.a;
  out.adot[0] = 0.0;

  auto cut = cuts.begin();
  for (std::size_t k = 0; k < times.n_steps(); ++k) {
    double t0 = times.t(k);
    const double t1 = times.t(k + 1);
    while (cut != cuts.end() && *cut <= t0) ++cut;
    for (; cut != cuts.end() && *cut < t1; ++cut) {
      y = rk4(omega_sq, inv_m2, y, t0, *cut);
      t0 = *cut;
    }
    y = rk4(omega_sq, inv_m2, y, t0, t1);
    if (!std::isfinite(y.a) || y.a < floor) {
      std::ostringstream os;
      os << "ermakov: width collapsed to " << y.a << " at t = " << t1
         << " (should not happen for a confining protocol)";
      throw DivergenceError(os.str());
    }
    out.a[k + 1] = y.a;
    out.adot[k + 1] = y.v;
  }
  return out;
}

WidthTrajectory solve_ermakov(const FrequencyProtocol& w, double mass, const TimeGrid& times) {
  if (!(w.omega(0.0) > 0.0)) throw ModelInvalidError("ermakov: omega(0) must be > 0");
  const auto bp = w.breakpoints(times.t_final());
  return solve_ermakov([w](double t) { return w.omega_sq(t); }, w.omega0 * w.omega0, bp, mass, times);
}

WidthTrajectory solve_ermakov(const EffectiveFrequency& w, double mass, const TimeGrid& times) {
  const auto bp = w.base.breakpoints(times.t_final());
  const double w0sq = w.base.omega0 * w.base.omega0 - w.shift;
  return solve_ermakov([w](double t) { return w.omega_sq(t); }, w0sq, bp, mass, times);
}

double ermakov_energy(double a, double adot, double omega_sq, double mass) {
  return 0.5 * (adot * adot + omega_sq * a * a + 1.0 / (mass * mass * a * a));
}

double lewis_invariant(double a, double adot, double x, double xdot, double mass) {
  const double q = x / a, p = a * xdot - adot * x;
  return 0.5 * (q * q / (mass * mass) + p * p);
}

DensityTrajectory cm_density(const WidthTrajectory& width, const RadialGrid& grid) {
  DensityTrajectory out(grid, width.times);
  for (std::size_t k = 0; k < width.times.n_slices(); ++k) {
    const double a = width.a[k];
    const double norm = 1.0 / (a * a * a * std::pow(std::numbers::pi, 1.5));
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double x = grid.r(j) / a;
      out.values(k, j) = norm * std::exp(-x * x);
    }
  }
  return out;
}

void write_width(const std::filesystem::path& csv, const WidthTrajectory& width) {
  std::ofstream out(csv);
  if (!out) throw Error("cannot open " + csv.string() + " for writing");
  out << "t,a,adot\n";
  for (std::size_t k = 0; k < width.times.n_slices(); ++k)
    out << io::format_double(width.times.t(k)) << ',' << io::format_double(width.a[k]) << ','
        << io::format_double(width.adot[k]) << '\n';
  io::write_json(io::sidecar_path(csv), {{"kind", "width"},
                                         {"mass", width.mass},
                                         {"omega0", width.omega0},
                                         {"t_final", width.times.t_final()},
                                         {"n_steps", width.times.n_steps()}});
}

WidthTrajectory read_width(const std::filesystem::path& csv) {
  const auto meta = io::read_json(io::sidecar_path(csv));
  TimeGrid times(meta.at("t_final").get<double>(), meta.at("n_steps").get<std::size_t>());
  WidthTrajectory w{times, meta.at("mass").get<double>(), meta.at("omega0").get<double>(), {}, {}};
  std::ifstream in(csv);
  if (!in) throw InputShapeError("cannot open " + csv.string());
  std::string line;
  std::getline(in, line);
  if (line != "t,a,adot") throw InputShapeError("read_width: unexpected header '" + line + "'");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = io::split_csv_line(line);
    if (cells.size() != 3) throw InputShapeError("read_width: expected 3 columns");
    w.a.push_back(io::parse_double(cells[1]));
    w.adot.push_back(io::parse_double(cells[2]));
  }
  if (w.a.size() != times.n_slices()) throw InputShapeError("read_width: row count does not match grid");
  return w;
}

}  // namespace hhm
