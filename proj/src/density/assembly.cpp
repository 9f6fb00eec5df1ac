#include "hhm/density/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "hhm/core/errors.hpp"
#include "hhm/core/io.hpp"
#include "hhm/core/parallel.hpp"
#include "hhm/core/quadrature.hpp"

namespace hhm {

namespace {

// Cubic Lagrange interpolation of an even function sampled on a uniform grid
// starting at 0; ghosts below 0 are mirrored, samples past the end are 0.
struct EvenCubic {
  std::span<const double> f;
  double h;

  double at(long j) const {
    if (j < 0) j = -j;
    return j < static_cast<long>(f.size()) ? f[static_cast<std::size_t>(j)] : 0.0;
  }
  double operator()(std::size_t i, double t) const {
    const long j = static_cast<long>(i);
    const double lm = -t * (t - 1.0) * (t - 2.0) / 6.0;
    const double l0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    const double l1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    const double l2 = (t + 1.0) * t * (t - 1.0) / 6.0;
    return lm * at(j - 1) + l0 * at(j) + l1 * at(j + 1) + l2 * at(j + 2);
  }
};

struct Disagreement {
  double worst = 0.0;
  double r = 0.0;
};

Disagreement compare(const std::vector<double>& coarse, const std::vector<double>& fine,
                     const RadialGrid& grid) {
  const double peak = *std::max_element(fine.begin(), fine.end(),
                                        [](double a, double b) { return std::abs(a) < std::abs(b); });
  const double floor = 1e-14 * std::abs(peak);
  Disagreement d;
  for (std::size_t j = 0; j < fine.size(); ++j) {
    const double rel = std::abs(coarse[j] - fine[j]) / (std::abs(fine[j]) + floor);
    if (rel > d.worst) d = {rel, grid.r(j)};
  }
  return d;
}

// Picks the y-rule order for one slice by doubling; returns the order and
// leaves the converged density in `out`.
int select_order(double a_cm, const RadialWavefunction& rm, const RadialGrid& grid,
                 const QuadratureSpec& spec, std::vector<double>& out) {
  int order = std::max(1, spec.order);
  auto coarse = pair_density(a_cm, rm, grid, order);
  Disagreement d;
  while (2 * order <= spec.max_order) {
    auto fine = pair_density(a_cm, rm, grid, 2 * order);
    d = compare(coarse, fine, grid);
    if (d.worst <= spec.rel_tol) {
      out = std::move(fine);
      return order;
    }
    coarse = std::move(fine);
    order *= 2;
  }
  std::ostringstream os;
  os << "assemble_density: y-quadrature did not converge up to order " << spec.max_order
     << " nodes per panel; relative change " << d.worst << " at r = " << d.r;
  throw QuadratureError(os.str());
}

void require_decayed_tail(const RadialWavefunction& psi, double t) {
  double peak = 0.0;
  for (const auto& c : psi.chi) peak = std::max(peak, std::norm(c));
  const double tail = std::norm(psi.chi[psi.chi.size() - 2]);
  if (tail > 1e-12 * peak) {
    std::ostringstream os;
    os << "assemble_density: relative-motion wavefunction not decayed at s_max = "
       << psi.grid.r_max() << " (|chi|^2 ratio " << tail / peak << " at t = " << t
       << "); enlarge the relative-motion grid";
    throw InsufficientDataError(os.str());
  }
}

}  // namespace

std::vector<double> pair_density(double a_cm, const RadialWavefunction& rm, const RadialGrid& grid,
                                 int order) {
  if (!(a_cm > 0.0)) throw ModelInvalidError("pair_density: centre-of-mass width must be > 0");
  const auto rho = rm.density();
  const auto& sg = rm.grid;
  const double h = sg.spacing();
  const EvenCubic interp{rho, h};
  const GaussRule rule = gauss_legendre(order);

  // quadrature nodes in y with the r-independent part of the integrand folded in
  std::vector<double> ys, gs;
  ys.reserve((sg.size() - 1) * static_cast<std::size_t>(order));
  gs.reserve(ys.capacity());
  for (std::size_t i = 0; i + 1 < sg.size(); ++i) {
    for (int q = 0; q < order; ++q) {
      const double t = 0.5 * (1.0 + rule.x[q]);
      const double s = sg.r(i) + t * h;
      const double y = s / a_cm;
      ys.push_back(y);
      gs.push_back(y * y * interp(i, t) * 0.5 * h * rule.w[q] / a_cm);
    }
  }

  const double pref = 8.0 / std::sqrt(std::numbers::pi);
  std::vector<double> n(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double xr = grid.r(j) / a_cm;
    double sum = 0.0;
    for (std::size_t q = 0; q < ys.size(); ++q) {
      const double y = ys[q];
      const double x = xr * y;
      double f;
      if (x < 1e-3) {
        const double x2 = x * x;
        f = std::exp(-xr * xr - 0.25 * y * y) * (1.0 + x2 / 6.0 + x2 * x2 / 120.0);
      } else {
        // e^{-xr^2} sinh(x)/x e^{-y^2/4} = e^{-(xr - y/2)^2} (1 - e^{-2x}) / (2x)
        const double d = xr - 0.5 * y;
        f = std::exp(-d * d) * (-std::expm1(-2.0 * x)) / (2.0 * x);
      }
      sum += gs[q] * f;
    }
    n[j] = pref * sum;
  }
  return n;
}

std::vector<double> static_density(double a_cm, const RadialWavefunction& rm, const RadialGrid& grid,
                                   QuadratureSpec spec) {
  require_decayed_tail(rm, 0.0);
  std::vector<double> out;
  select_order(a_cm, rm, grid, spec, out);
  return out;
}

std::size_t width_stride(const WidthTrajectory& width, const TimeGrid& snapshots, const char* who) {
  const double ratio = snapshots.dt() / width.times.dt();
  const auto stride = static_cast<std::size_t>(std::lround(ratio));
  if (stride == 0 || std::abs(ratio - static_cast<double>(stride)) > 1e-9 * ratio ||
      snapshots.n_steps() * stride != width.times.n_steps())
    throw InputShapeError(std::string(who) + ": width and relative-motion trajectories use different time grids");
  return stride;
}

DensityTrajectory assemble_density(const WidthTrajectory& width, const WavefunctionTrajectory& rm,
                                   const RadialGrid& grid, QuadratureSpec spec) {
  const std::size_t stride = width_stride(width, rm.times, "assemble_density");
  if (rm.chi.size() != rm.times.n_slices())
    throw InputShapeError("assemble_density: relative-motion trajectory is missing slices");

  for (std::size_t k = 0; k < rm.times.n_slices(); ++k) require_decayed_tail(rm.at(k), rm.times.t(k));

  DensityTrajectory out(grid, rm.times);
  std::vector<double> first;
  const int order = select_order(width.a[0], rm.at(0), grid, spec, first);
  std::copy(first.begin(), first.end(), out.values.row(0).begin());

  const std::size_t n = rm.times.n_slices();
  const std::size_t every = std::max<std::size_t>(1, spec.check_every);
  parallel_for(n - 1, spec.jobs, [&](std::size_t i) {
    const std::size_t k = i + 1;
    const double a = width.a[k * stride];
    const auto psi = rm.at(k);
    auto dens = pair_density(a, psi, grid, 2 * order);
    if (k % every == 0 || k + 1 == n) {
      const auto check = pair_density(a, psi, grid, order);
      const auto d = compare(check, dens, grid);
      if (d.worst > spec.fail_tol) {
        std::ostringstream os;
        os << "assemble_density: y-quadrature estimates disagree by " << d.worst
           << " (relative) at r = " << d.r << ", t = " << rm.times.t(k);
        throw QuadratureError(os.str());
      }
    }
    std::copy(dens.begin(), dens.end(), out.values.row(k).begin());
  });
  return out;
}

ScatteringFactor scattering_factor(const DensityTrajectory& n, double k_max, std::size_t n_k) {
  if (n_k < 2 || !(k_max > 0.0)) throw InputShapeError("scattering_factor: need n_k >= 2 and k_max > 0");
  ScatteringFactor f{n.times, k_max, n_k, std::vector<std::complex<double>>(n.times.n_slices() * n_k)};
  std::vector<double> integrand(n.grid.size());
  for (std::size_t k = 0; k < n.times.n_slices(); ++k) {
    const auto row = n.values.row(k);
    for (std::size_t q = 0; q < n_k; ++q) {
      const double kk = f.k(q);
      for (std::size_t j = 0; j < n.grid.size(); ++j) {
        const double x = kk * n.grid.r(j);
        integrand[j] = row[j] * (x == 0.0 ? 1.0 : std::sin(x) / x);
      }
      f.values[k * n_k + q] = integrate_radial(integrand, n.grid);
    }
  }
  return f;
}

namespace {

struct PairWidths {
  WidthTrajectory cm, rm;
};

PairWidths moshinsky_widths(const FrequencyProtocol& w, double K, const TimeGrid& times) {
  require_bound_relative_motion(InteractionSpec::moshinsky(K), w, 0.5, times.t_final());
  // the output grid may be coarse; integrate on a substepped grid and sample it
  const auto sub = static_cast<std::size_t>(std::ceil(times.dt() / 1e-3 - 1e-9));
  const TimeGrid fine(times.t_final(), times.n_steps() * std::max<std::size_t>(sub, 1));
  auto thin = [&](WidthTrajectory wt) {
    const std::size_t stride = fine.n_steps() / times.n_steps();
    WidthTrajectory out{times, wt.mass, wt.omega0, {}, {}};
    for (std::size_t k = 0; k < times.n_slices(); ++k) {
      out.a.push_back(wt.a[k * stride]);
      out.adot.push_back(wt.adot[k * stride]);
    }
    return out;
  };
  return {thin(solve_ermakov(w, 2.0, fine)), thin(solve_ermakov(EffectiveFrequency{w, 2.0 * K}, 0.5, fine))};
}

}  // namespace

ScatteringFactor moshinsky_scattering_closed_form(const FrequencyProtocol& w, double K,
                                                  double k_max, std::size_t n_k,
                                                  const TimeGrid& times) {
  if (n_k < 2 || !(k_max > 0.0)) throw InputShapeError("closed form: need n_k >= 2 and k_max > 0");
  const auto widths = moshinsky_widths(w, K, times);
  ScatteringFactor f{times, k_max, n_k, std::vector<std::complex<double>>(times.n_slices() * n_k)};
  for (std::size_t k = 0; k < times.n_slices(); ++k) {
    // widths through the phase velocity: a = 1 / (M phidot)
    const double ac = 1.0 / (widths.cm.mass * widths.cm.phidot(k));
    const double ar = 1.0 / (widths.rm.mass * widths.rm.phidot(k));
    for (std::size_t q = 0; q < n_k; ++q) {
      const double kk = f.k(q);
      f.values[k * n_k + q] = 2.0 * std::exp(-kk * kk * ac * ac / 4.0) * std::exp(-kk * kk * ar * ar / 16.0);
    }
  }
  return f;
}

DensityTrajectory moshinsky_density_closed_form(const FrequencyProtocol& w, double K,
                                                const RadialGrid& grid, const TimeGrid& times) {
  const auto widths = moshinsky_widths(w, K, times);
  DensityTrajectory out(grid, times);
  for (std::size_t k = 0; k < times.n_slices(); ++k) {
    const double b2 = widths.cm.a[k] * widths.cm.a[k] + 0.25 * widths.rm.a[k] * widths.rm.a[k];
    const double norm = 2.0 / (b2 * std::sqrt(b2) * std::pow(std::numbers::pi, 1.5));
    for (std::size_t j = 0; j < grid.size(); ++j) out.values(k, j) = norm * std::exp(-grid.r(j) * grid.r(j) / b2);
  }
  return out;
}

void write_scattering(const std::filesystem::path& csv, const ScatteringFactor& f) {
  std::ofstream out(csv);
  if (!out) throw Error("cannot open " + csv.string() + " for writing");
  out << "t,k,re_f,im_f\n";
  for (std::size_t k = 0; k < f.times.n_slices(); ++k)
    for (std::size_t q = 0; q < f.n_k; ++q)
      out << io::format_double(f.times.t(k)) << ',' << io::format_double(f.k(q)) << ','
          << io::format_double(f(k, q).real()) << ',' << io::format_double(f(k, q).imag()) << '\n';
  io::write_json(io::sidecar_path(csv), {{"kind", "scattering_factor"},
                                         {"t_final", f.times.t_final()},
                                         {"n_steps", f.times.n_steps()},
                                         {"k_max", f.k_max},
                                         {"n_k", f.n_k}});
}

ScatteringFactor read_scattering(const std::filesystem::path& csv) {
  const auto meta = io::read_json(io::sidecar_path(csv));
  TimeGrid times(meta.at("t_final").get<double>(), meta.at("n_steps").get<std::size_t>());
  ScatteringFactor f{times, meta.at("k_max").get<double>(), meta.at("n_k").get<std::size_t>(), {}};
  std::ifstream in(csv);
  if (!in) throw InputShapeError("cannot open " + csv.string());
  std::string line;
  std::getline(in, line);
  if (line != "t,k,re_f,im_f") throw InputShapeError("read_scattering: unexpected header '" + line + "'");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = io::split_csv_line(line);
    if (cells.size() != 4) throw InputShapeError("read_scattering: expected 4 columns");
    f.values.emplace_back(io::parse_double(cells[2]), io::parse_double(cells[3]));
  }
  if (f.values.size() != times.n_slices() * f.n_k)
    throw InputShapeError("read_scattering: row count does not match grids");
  return f;
}

}  // namespace hhm
