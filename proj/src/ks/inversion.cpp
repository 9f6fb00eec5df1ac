#include "hhm/ks/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "hhm/core/errors.hpp"
#include "hhm/core/io.hpp"
#include "hhm/core/parallel.hpp"
#include "hhm/core/stencils.hpp"
#include "hhm/rm/radial.hpp"

namespace hhm {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

// Last node of the contiguous block from the origin where n > floor * max n.
std::size_t mask_edge(std::span<const double> n, double floor, double t) {
  const double peak = *std::max_element(n.begin(), n.end());
  if (!(peak > 0.0) || !(n[0] > floor * peak)) {
    std::ostringstream os;
    os << "evaluation mask is empty at t = " << t << " (density not positive at the origin)";
    throw DegenerateInputError(os.str());
  }
  std::size_t j = 0;
  while (j + 1 < n.size() && n[j + 1] > floor * peak) ++j;
  return j;
}

std::size_t contiguous_edge(std::span<const double> mask) {
  std::size_t j = 0;
  while (j + 1 < mask.size() && mask[j + 1] > 0.5) ++j;
  return j;
}

}  // namespace

VelocityField velocity_field(const DensityTrajectory& n, InversionOptions options) {
  const auto& grid = n.grid;
  const std::size_t N = grid.size();
  auto dn = d_dt(n.values, n.times, 1, options.time_accuracy);
  VelocityField out{grid, n.times, Field(n.times.n_slices(), N), Field(n.times.n_slices(), N),
                    std::vector<std::size_t>(n.times.n_slices()), dn.one_sided};

  parallel_for(n.times.n_slices(), options.jobs, [&](std::size_t k) {
    const auto row = n.values.row(k);
    const std::size_t jm = mask_edge(row, options.floor, n.times.t(k));
    const std::size_t js = std::max(jm, mask_edge(row, options.support, n.times.t(k)));
    out.support_edge[k] = js;

    std::vector<double> g(N), rev(N), mass(N);
    for (std::size_t j = 0; j < N; ++j) {
      g[j] = dn.values(k, j) * grid.r(j) * grid.r(j);
      rev[N - 1 - j] = g[j];
      mass[j] = row[j] * grid.r(j) * grid.r(j);
    }
    const auto inner = cumulative_integral(g, grid, Parity::even);
    const auto outer = cumulative_integral(rev, grid);  // int_r^{r_max}, reversed
    const auto cum = cumulative_integral(mass, grid);
    const std::size_t median = static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), 0.5 * cum.back()) - cum.begin());

    auto v = out.v.row(k);
    auto m = out.mask.row(k);
    for (std::size_t j = 0; j <= jm; ++j) m[j] = 1.0;
    for (std::size_t j = 1; j <= js; ++j) {
      const double I = j <= median ? inner[j] : -outer[N - 1 - j];
      v[j] = -I / (grid.r(j) * grid.r(j) * row[j]);
    }
  });
  return out;
}

KSOrbital build_orbital(const DensityTrajectory& n, const VelocityField& v) {
  if (!(n.grid == v.grid) || !(n.times == v.times))
    throw InputShapeError("build_orbital: density and velocity grids differ");
  const std::size_t K = n.times.n_slices(), N = n.grid.size();
  KSOrbital out{n.grid, n.times, Field(K, N), Field(K, N), v.v, v.mask, v.one_sided};
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < N; ++j) out.amplitude(k, j) = std::sqrt(std::max(n.values(k, j), 0.0) / 2.0);
    // integrate over the support only: v drops to 0 past it
    const std::size_t js = std::max<std::size_t>(v.support_edge[k], 3);
    const auto alpha = cumulative_integral(v.v.row(k).first(js + 1), n.grid.spacing(), Parity::odd);
    auto phase = out.phase.row(k);
    std::copy(alpha.begin(), alpha.end(), phase.begin());
    std::fill(phase.begin() + static_cast<long>(js) + 1, phase.end(), alpha.back());
  }
  return out;
}

PotentialTrajectory invert_potential(const KSOrbital& orbital, InversionOptions options) {
  const auto& grid = orbital.grid;
  const std::size_t N = grid.size();
  auto dalpha = d_dt(orbital.phase, orbital.times, 1, options.time_accuracy);
  PotentialTrajectory out(grid, orbital.times);
  out.one_sided = dalpha.one_sided;
  out.mask = orbital.mask;

  parallel_for(orbital.times.n_slices(), options.jobs, [&](std::size_t k) {
    const std::size_t jm = contiguous_edge(orbital.mask.row(k));
    std::vector<double> l(N);
    for (std::size_t j = 0; j < N; ++j) l[j] = std::log(std::max(orbital.amplitude(k, j), 1e-300));
    const auto lap = radial_laplacian(l, grid, options.order);
    const auto d1 = radial_d1(l, grid, Parity::even, options.order);
    auto V = out.values.row(k);
    for (std::size_t j = 0; j < N; ++j) {
      if (j > jm) {
        V[j] = nan;
        continue;
      }
      const double v = orbital.velocity(k, j);
      V[j] = -dalpha.values(k, j) + 0.5 * (lap[j] + d1[j] * d1[j] - v * v);
    }
    const double v0 = V[0];
    for (std::size_t j = 0; j <= jm; ++j) V[j] -= v0;
  });
  return out;
}

Field extend_potential(const PotentialTrajectory& V) {
  Field out = V.values;
  for (std::size_t k = 0; k < out.rows(); ++k) {
    const std::size_t jm = contiguous_edge(V.mask.row(k));
    const double rm = V.grid.r(jm), vm = out(k, jm);
    for (std::size_t j = jm + 1; j < out.cols(); ++j) {
      const double x = rm > 0.0 ? V.grid.r(j) / rm : 1.0;
      out(k, j) = vm * x * x;
    }
  }
  return out;
}

RoundtripReport repropagate_check(const PotentialTrajectory& V, const DensityTrajectory& n_target,
                                  RoundtripOptions options) {
  if (!(V.grid == n_target.grid) || !(V.times == n_target.times))
    throw InputShapeError("repropagate_check: potential and density grids differ");
  if (options.substeps == 0) throw InputShapeError("repropagate_check: substeps must be >= 1");
  const auto& grid = V.grid;
  const std::size_t N = grid.size();

  // gauge first, so the harmonic continuation never sees the constant
  PotentialTrajectory gauged = V;
  for (std::size_t k = 0; k < gauged.values.rows(); ++k) {
    const double v0 = gauged.values(k, 0);
    for (double& x : gauged.values.row(k)) x -= v0;
  }
  const Field ext = extend_potential(gauged);

  RadialWavefunction psi0{grid, std::vector<complex>(N, 0.0), 1.0};
  const double c = std::sqrt(4.0 * std::numbers::pi);
  for (std::size_t j = 1; j + 1 < N; ++j)
    psi0.chi[j] = c * grid.r(j) * std::sqrt(std::max(n_target.values(0, j), 0.0) / 2.0);
  RoundtripReport report;
  report.initial_norm = psi0.norm();
  if (!(report.initial_norm > 0.0)) throw DegenerateInputError("repropagate_check: initial density is empty");
  for (auto& x : psi0.chi) x /= std::sqrt(report.initial_norm);

  const double dtv = V.times.dt();
  const std::size_t last = V.times.n_steps();
  PotentialFn fn = [&](double t, std::span<const double>, std::span<double> v) {
    const double u = t / dtv;
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(u), last - 1);
    const double theta = u - static_cast<double>(k);
    for (std::size_t i = 0; i < v.size(); ++i)
      v[i] = (1.0 - theta) * ext(k, i + 1) + theta * ext(k + 1, i + 1);
  };
  const TimeGrid fine(V.times.t_final(), V.times.n_steps() * options.substeps);
  auto traj = propagate(psi0, fn, fine, {.stride = options.substeps, .norm_tolerance = options.norm_tolerance});

  std::vector<double> diff(N), target(N);
  for (std::size_t k = 0; k < V.times.n_slices(); ++k) {
    const auto rho = traj.at(k).density();
    for (std::size_t j = 0; j < N; ++j) {
      const double d = 2.0 * rho[j] - n_target.values(k, j);
      diff[j] = d * d;
      target[j] = n_target.values(k, j) * n_target.values(k, j);
    }
    const double m = std::sqrt(integrate_radial(diff, grid) / integrate_radial(target, grid));
    report.mismatch.push_back(m);
    if (m > report.max_mismatch) {
      report.max_mismatch = m;
      report.t_worst = V.times.t(k);
    }
  }
  return report;
}

void write_potential(const std::filesystem::path& csv, const PotentialTrajectory& V) {
  std::ofstream out(csv);
  if (!out) throw Error("cannot open " + csv.string() + " for writing");
  out << "t,r,V,mask\n";
  for (std::size_t k = 0; k < V.times.n_slices(); ++k)
    for (std::size_t j = 0; j < V.grid.size(); ++j)
      out << io::format_double(V.times.t(k)) << ',' << io::format_double(V.grid.r(j)) << ','
          << io::format_double(V.values(k, j)) << ',' << (V.mask(k, j) > 0.5 ? 1 : 0) << '\n';
  auto meta = io::grid_metadata(V.grid, V.times);
  meta["kind"] = "potential";
  meta["gauge"] = "V(0,t)=0";
  std::vector<int> flags;
  for (bool b : V.one_sided) flags.push_back(b ? 1 : 0);
  meta["one_sided"] = flags;
  io::write_json(io::sidecar_path(csv), meta);
}

PotentialTrajectory read_potential(const std::filesystem::path& csv) {
  const auto meta = io::read_json(io::sidecar_path(csv));
  PotentialTrajectory V(io::radial_grid_from(meta), io::time_grid_from(meta));
  if (meta.contains("one_sided"))
    for (std::size_t k = 0; k < V.one_sided.size() && k < meta["one_sided"].size(); ++k)
      V.one_sided[k] = meta["one_sided"][k].get<int>() != 0;
  std::ifstream in(csv);
  if (!in) throw InputShapeError("cannot open " + csv.string());
  std::string line;
  std::getline(in, line);
  if (line != "t,r,V,mask") throw InputShapeError("read_potential: unexpected header '" + line + "'");
  std::size_t count = 0;
  const std::size_t expected = V.times.n_slices() * V.grid.size();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = io::split_csv_line(line);
    if (cells.size() != 4 || count >= expected) throw InputShapeError("read_potential: malformed row");
    V.values.flat()[count] = io::parse_double(cells[2]);
    V.mask.flat()[count] = io::parse_double(cells[3]);
    ++count;
  }
  if (count != expected) throw InputShapeError("read_potential: row count does not match grids");
  return V;
}

}  // namespace hhm
