#include "hhm/virial/checks.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

#include "hhm/core/errors.hpp"
#include "hhm/core/io.hpp"
#include "hhm/core/parallel.hpp"
#include "hhm/core/quadrature.hpp"
#include "hhm/core/stencils.hpp"
#include "hhm/density/assembly.hpp"

namespace hhm {
namespace {

constexpr double pi = std::numbers::pi;

void require_same(const RadialGrid& g1, const TimeGrid& t1, const RadialGrid& g2, const TimeGrid& t2,
                  const char* who) {
  if (!(g1 == g2) || !(t1 == t2))
    throw InputShapeError(std::string(who) + ": inputs live on different grids");
}

// contiguous block from the origin with n above the floor, cut at r_eval
std::size_t mask_edge(std::span<const double> n, const RadialGrid& grid, const ResidualOptions& o) {
  const double peak = *std::max_element(n.begin(), n.end());
  std::size_t j = 0;
  while (j < n.size() && n[j] > o.floor * peak && grid.r(j) <= o.r_eval) ++j;
  return j;  // one past the last node
}

ResidualField make_field(std::string identity, const RadialGrid& g, const TimeGrid& t) {
  const std::size_t n = t.n_slices();
  return {std::move(identity), g, t, Field(n, g.size(), std::nan("")), Field(n, g.size()),
          std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<bool>(n, false)};
}

// stores res on [0, edge) wherever it is finite and fills the norms
void finish_slice(ResidualField& out, std::size_t k, std::span<const double> res, std::size_t edge) {
  std::vector<double> sq(res.size(), 0.0);
  double linf = 0.0;
  for (std::size_t j = 0; j < edge; ++j) {
    if (!std::isfinite(res[j])) continue;
    out.residual(k, j) = res[j];
    out.mask(k, j) = 1.0;
    sq[j] = res[j] * res[j];
    linf = std::max(linf, std::abs(res[j]));
  }
  out.l2[k] = std::sqrt(integrate_radial(sq, out.grid));
  out.linf[k] = linf;
}

// d^2n/dt^2 + (1/4) lap^2 n - div z - div(n grad V) - extra
ResidualField dvt_core(const char* identity, const DensityTrajectory& n, const KineticVectorField& z,
                       const PotentialTrajectory& V, const Field* extra, const ResidualOptions& o) {
  require_same(n.grid, n.times, z.grid, z.times, identity);
  require_same(n.grid, n.times, V.grid, V.times, identity);
  const auto d2n = d_dt(n.values, n.times, 2, o.time_accuracy);
  auto out = make_field(identity, n.grid, n.times);
  const auto& g = n.grid;
  parallel_for(n.times.n_slices(), o.jobs, [&](std::size_t k) {
    const auto nk = n.values.row(k);
    auto bilap = radial_laplacian(radial_laplacian(nk, g, o.order), g, o.order);
    // the inner Laplacian switches formula at r = 0 and the outer one turns
    // that kink in its truncation error into an O(h^2) spike; use the even
    // extrapolation from the next nodes instead
    if (bilap.size() > 3) bilap[0] = 1.5 * bilap[1] - 0.6 * bilap[2] + 0.1 * bilap[3];
    const auto divz = radial_divergence(z.z.row(k), g, o.order);
    const auto dV = radial_d1(V.values.row(k), g, Parity::even, o.order);
    std::vector<double> q(g.size());
    for (std::size_t j = 0; j < q.size(); ++j) q[j] = nk[j] * dV[j];
    const auto divq = radial_divergence(q, g, o.order);
    std::vector<double> res(g.size());
    for (std::size_t j = 0; j < res.size(); ++j) {
      res[j] = d2n.values(k, j) + 0.25 * bilap[j] - divz[j] - divq[j];
      if (extra) res[j] -= (*extra)(k, j);
      if (z.mask(k, j) == 0.0 || V.mask(k, j) == 0.0) res[j] = std::nan("");
    }
    finish_slice(out, k, res, mask_edge(nk, g, o));
    out.one_sided[k] = d2n.one_sided[k] || z.one_sided[k] || V.one_sided[k];
  });
  return out;
}

// z_r = 2 (tau' + 2 tau / r) for an even scalar tau
std::vector<double> z_from_tau(std::span<const double> tau, const RadialGrid& g, int order) {
  const auto d = radial_d1(tau, g, Parity::even, order);
  std::vector<double> z(tau.size(), 0.0);
  for (std::size_t j = 1; j < z.size(); ++j) z[j] = 2.0 * (d[j] + 2.0 * tau[j] / g.r(j));
  return z;
}

struct PairSlice {
  std::vector<double> z, force, div_force;
};

// All three moments of the separable pair state at one time.
//   t_ab = int d^3s g(c) [ |k|^2/4 |R|^2 c_a c_b + Q/2 (c_a s_b + s_a c_b) + |R'|^2 s_a s_b ]
// with c = r - s/2, g the CM Gaussian, Q = Re(k* R* R'), s_a the unit vector.
PairSlice pair_slice(double a, double adot, double mass, double K, const RadialWavefunction& rm,
                     const RadialGrid& grid, const GaussRule& mu_rule, double r_cut) {
  const auto& sg = rm.grid;
  const std::size_t ns = sg.size();
  std::vector<double> re(ns), im(ns);
  const double c0 = 1.0 / std::sqrt(4.0 * pi);
  for (std::size_t j = 1; j < ns; ++j) {
    re[j] = c0 * rm.chi[j].real() / sg.r(j);
    im[j] = c0 * rm.chi[j].imag() / sg.r(j);
  }
  re[0] = 1.5 * re[1] - 0.6 * re[2] + 0.1 * re[3];
  im[0] = 1.5 * im[1] - 0.6 * im[2] + 0.1 * im[3];
  const auto dre = radial_d1(re, sg, Parity::even);
  const auto dim = radial_d1(im, sg, Parity::even);

  const std::complex<double> kappa(-1.0 / (a * a), mass * adot / a);
  const double k2 = std::norm(kappa);
  std::vector<double> A(ns), Q(ns), P(ns), W(ns), S(ns);
  double peak = 0.0;
  for (std::size_t j = 0; j < ns; ++j) {
    const std::complex<double> R(re[j], im[j]), dR(dre[j], dim[j]);
    S[j] = std::norm(R);
    A[j] = 0.25 * k2 * S[j];
    Q[j] = std::real(std::conj(kappa) * std::conj(R) * dR);
    P[j] = std::norm(dR);
    W[j] = 2.0 * pi * sg.r(j) * sg.r(j) * sg.weights()[j];
    peak = std::max(peak, S[j] + P[j]);
  }

  const double a2 = a * a;
  const double gnorm = 1.0 / (a2 * a * std::pow(pi, 1.5));
  PairSlice out{std::vector<double>(grid.size()), std::vector<double>(grid.size()),
                std::vector<double>(grid.size())};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.r(i);
    if (r > r_cut) break;
    double z = 0.0, f = 0.0, df = 0.0;
    for (std::size_t j = 1; j < ns; ++j) {
      if (S[j] + P[j] < 1e-300 * peak || W[j] == 0.0) continue;
      const double s = sg.r(j);
      const double closest = (r - 0.5 * s) * (r - 0.5 * s) / a2;
      if (closest > 745.0) continue;
      double zj = 0.0, fj = 0.0, dfj = 0.0;
      for (std::size_t m = 0; m < mu_rule.x.size(); ++m) {
        const double mu = mu_rule.x[m];
        const double x = (r * r - r * s * mu + 0.25 * s * s) / a2;
        if (x > 745.0) continue;
        const double gw = mu_rule.w[m] * std::exp(-x);
        const double sc = r * mu - 0.5 * s;  // s_hat . c
        const double cr = r - 0.5 * s * mu;  // c . r_hat
        zj += gw * (A[j] * cr * (4.0 - 2.0 * x) +
                    0.5 * Q[j] * (mu * (4.0 - 2.0 * x) - 2.0 * cr * sc / a2) -
                    2.0 * P[j] * mu * sc / a2);
        fj += gw * s * mu;
        dfj += gw * s * sc;
      }
      z += W[j] * zj;
      f += W[j] * S[j] * fj;
      df += W[j] * S[j] * dfj;
    }
    out.z[i] = 2.0 * gnorm * z;
    out.force[i] = -2.0 * K * gnorm * f;
    out.div_force[i] = 4.0 * K / a2 * gnorm * df;
  }
  return out;
}

GaussRule composite_mu(const PairQuadrature& q) {
  if (q.panels < 1 || q.order < 2) throw InputError("pair quadrature: need panels >= 1 and order >= 2");
  const auto base = gauss_legendre(q.order);
  GaussRule out;
  const double h = 2.0 / q.panels;
  for (int p = 0; p < q.panels; ++p) {
    const double mid = -1.0 + (p + 0.5) * h;
    for (std::size_t m = 0; m < base.x.size(); ++m) {
      out.x.push_back(mid + 0.5 * h * base.x[m]);
      out.w.push_back(0.5 * h * base.w[m]);
    }
  }
  return out;
}

template <class Fn>
void for_pair_slices(const WidthTrajectory& width, const WavefunctionTrajectory& rm, double K,
                     const RadialGrid& grid, const PairQuadrature& q, Fn&& store) {
  const std::size_t stride = width_stride(width, rm.times, "pair moments");
  if (rm.chi.size() != rm.times.n_slices()) throw InputShapeError("pair moments: relative-motion trajectory is missing slices");
  if (rm.grid.size() < 4) throw InputShapeError("pair moments: relative-motion grid too small");
  const auto rule = composite_mu(q);
  parallel_for(rm.times.n_slices(), q.jobs, [&](std::size_t k) {
    store(k, pair_slice(width.a[k * stride], width.adot[k * stride], width.mass, K, rm.at(k), grid, rule, q.r_cut));
  });
}

}  // namespace

double ResidualField::max_l2(bool skip_one_sided) const {
  double m = 0.0;
  for (std::size_t k = 0; k < l2.size(); ++k)
    if (!(skip_one_sided && one_sided[k])) m = std::max(m, l2[k]);
  return m;
}

double ResidualField::max_linf(bool skip_one_sided) const {
  double m = 0.0;
  for (std::size_t k = 0; k < linf.size(); ++k)
    if (!(skip_one_sided && one_sided[k])) m = std::max(m, linf[k]);
  return m;
}

ResidualField continuity_residual(const DensityTrajectory& n, const VelocityField& v, ResidualOptions o) {
  require_same(n.grid, n.times, v.grid, v.times, "continuity_residual");
  const auto dn = d_dt(n.values, n.times, 1, o.time_accuracy);
  auto out = make_field("continuity", n.grid, n.times);
  parallel_for(n.times.n_slices(), o.jobs, [&](std::size_t k) {
    const auto nk = n.values.row(k);
    std::vector<double> flux(nk.size());
    for (std::size_t j = 0; j < flux.size(); ++j) flux[j] = nk[j] * v.v(k, j);
    const auto div = radial_divergence(flux, n.grid, o.order);
    std::vector<double> res(flux.size());
    for (std::size_t j = 0; j < res.size(); ++j)
      res[j] = v.mask(k, j) != 0.0 ? dn.values(k, j) + div[j] : std::nan("");
    finish_slice(out, k, res, mask_edge(nk, n.grid, o));
    out.one_sided[k] = dn.one_sided[k] || v.one_sided[k];
  });
  return out;
}

KineticVectorField kinetic_vector_field(const KSOrbital& orb, ResidualOptions o) {
  const std::size_t nt = orb.times.n_slices();
  KineticVectorField out{"noninteracting", orb.grid, orb.times, Field(nt, orb.grid.size()), orb.mask,
                         orb.one_sided};
  parallel_for(nt, o.jobs, [&](std::size_t k) {
    const auto amp = orb.amplitude.row(k);
    const auto da = radial_d1(amp, orb.grid, Parity::even, o.order);
    std::vector<double> tau(amp.size());
    for (std::size_t j = 0; j < tau.size(); ++j) {
      const double v = orb.velocity(k, j);
      tau[j] = da[j] * da[j] + amp[j] * amp[j] * v * v;
    }
    const auto z = z_from_tau(tau, orb.grid, o.order);
    std::copy(z.begin(), z.end(), out.z.row(k).begin());
  });
  return out;
}

KineticVectorField kinetic_vector_field_static(const DensityTrajectory& n, ResidualOptions o) {
  const std::size_t nt = n.times.n_slices();
  KineticVectorField out{"noninteracting", n.grid, n.times, Field(nt, n.grid.size()),
                         Field(nt, n.grid.size(), 1.0), std::vector<bool>(nt, false)};
  for (std::size_t k = 0; k < nt; ++k) {
    const auto nk = n.values.row(k);
    const auto dn = radial_d1(nk, n.grid, Parity::even, o.order);
    std::vector<double> tau(nk.size(), 0.0);
    for (std::size_t j = 0; j < tau.size(); ++j)
      if (nk[j] > 1e-300) tau[j] = dn[j] * dn[j] / (8.0 * nk[j]);
    const auto z = z_from_tau(tau, n.grid, o.order);
    std::copy(z.begin(), z.end(), out.z.row(k).begin());
  }
  return out;
}

PotentialTrajectory external_potential(const FrequencyProtocol& w, const RadialGrid& grid,
                                       const TimeGrid& times) {
  PotentialTrajectory V(grid, times);
  for (std::size_t k = 0; k < times.n_slices(); ++k) {
    const double w2 = w.omega_sq(times.t(k));
    for (std::size_t j = 0; j < grid.size(); ++j) {
      V.values(k, j) = 0.5 * w2 * grid.r(j) * grid.r(j);
      V.mask(k, j) = 1.0;
    }
  }
  return V;
}

ResidualField dvt_residual_ks(const DensityTrajectory& n, const KineticVectorField& z_s,
                              const PotentialTrajectory& V, ResidualOptions o) {
  return dvt_core("dvt_ks", n, z_s, V, nullptr, o);
}

PairForceTerm interaction_force_term(const WidthTrajectory& width, const WavefunctionTrajectory& rm,
                                     const InteractionSpec& u, const RadialGrid& grid, PairQuadrature q) {
  if (u.kind != InteractionSpec::Kind::moshinsky && u.kind != InteractionSpec::Kind::none)
    throw UnsupportedScopeError("interaction_force_term: only the harmonic pair force is supported, got " + u.name());
  const double K = u.kind == InteractionSpec::Kind::moshinsky ? u.force_constant : 0.0;
  const std::size_t nt = rm.times.n_slices();
  PairForceTerm out{grid, rm.times, Field(nt, grid.size()), Field(nt, grid.size())};
  for_pair_slices(width, rm, K, grid, q, [&](std::size_t k, const PairSlice& p) {
    std::copy(p.force.begin(), p.force.end(), out.force.row(k).begin());
    std::copy(p.div_force.begin(), p.div_force.end(), out.divergence.row(k).begin());
  });
  return out;
}

KineticVectorField interacting_kinetic_vector_field(const WidthTrajectory& width, const WavefunctionTrajectory& rm,
                                                    const RadialGrid& grid, PairQuadrature q, ResidualOptions) {
  const std::size_t nt = rm.times.n_slices();
  KineticVectorField out{"interacting", grid, rm.times, Field(nt, grid.size()), Field(nt, grid.size(), 1.0),
                         std::vector<bool>(nt, false)};
  for_pair_slices(width, rm, 0.0, grid, q, [&](std::size_t k, const PairSlice& p) {
    std::copy(p.z.begin(), p.z.end(), out.z.row(k).begin());
  });
  return out;
}

InteractingTerms interacting_terms(const WidthTrajectory& width, const WavefunctionTrajectory& rm,
                                   const InteractionSpec& u, const RadialGrid& grid, PairQuadrature q) {
  if (u.kind != InteractionSpec::Kind::moshinsky && u.kind != InteractionSpec::Kind::none)
    throw UnsupportedScopeError("interacting_terms: only the harmonic pair force is supported, got " + u.name());
  const double K = u.kind == InteractionSpec::Kind::moshinsky ? u.force_constant : 0.0;
  const std::size_t nt = rm.times.n_slices();
  InteractingTerms out{{"interacting", grid, rm.times, Field(nt, grid.size()), Field(nt, grid.size(), 1.0),
                        std::vector<bool>(nt, false)},
                       {grid, rm.times, Field(nt, grid.size()), Field(nt, grid.size())}};
  for_pair_slices(width, rm, K, grid, q, [&](std::size_t k, const PairSlice& p) {
    std::copy(p.z.begin(), p.z.end(), out.z.z.row(k).begin());
    std::copy(p.force.begin(), p.force.end(), out.force.force.row(k).begin());
    std::copy(p.div_force.begin(), p.div_force.end(), out.force.divergence.row(k).begin());
  });
  return out;
}

ResidualField dvt_residual_interacting(const DensityTrajectory& n, const KineticVectorField& z,
                                       const PairForceTerm& force, const PotentialTrajectory& V_ext,
                                       ResidualOptions o) {
  require_same(n.grid, n.times, force.grid, force.times, "dvt_residual_interacting");
  return dvt_core("dvt_interacting", n, z, V_ext, &force.divergence, o);
}

void write_residual_report(const std::filesystem::path& json, const ResidualField& r) {
  nlohmann::json j;
  j["identity"] = r.identity;
  j["grid"] = io::grid_metadata(r.grid, r.times);
  j["l2"] = r.l2;
  j["linf"] = r.linf;
  std::vector<int> flags(r.one_sided.begin(), r.one_sided.end());
  j["one_sided"] = flags;
  j["max_l2"] = r.max_l2();
  j["max_linf"] = r.max_linf();
  io::write_json(json, j);
}

void write_convergence_csv(const std::filesystem::path& csv, const std::vector<ConvergenceRow>& rows) {
  std::ofstream out(csv);
  if (!out) throw InputError("cannot write " + csv.string());
  out << "h,dt,l2,order\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << io::format_double(rows[i].h) << ',' << io::format_double(rows[i].dt) << ',' << io::format_double(rows[i].l2) << ',';
    if (i > 0) out << io::format_double(std::log2(rows[i - 1].l2 / rows[i].l2));
    out << '\n';
  }
}

HptReport hpt_check(double omega0, double E0, double Omega, const TimeGrid& times, HptOptions o) {
  if (omega0 <= 0.0) throw ModelInvalidError("hpt_check: omega0 must be positive");
  if (o.stride == 0 || times.n_steps() % o.stride != 0)
    throw InputShapeError("hpt_check: stride must divide the number of steps");
  const LineGrid grid(o.x_max, o.n_points);
  const double w2 = omega0 * omega0;
  const LinePotential v0 = [w2](double x, double) { return 0.5 * w2 * x * x; };
  const double anh = o.anharmonic;
  const LinePotential v = [=](double x, double t) {
    return 0.5 * w2 * x * x - E0 * std::sin(Omega * t) * x + anh * x * x * x * x;
  };
  const auto psi0 = line_ground_state(v0, grid);
  const auto traj = propagate_cartesian_1d(psi0, v, times, o.stride);
  const auto n0 = psi0.density();

  HptReport rep;
  // classical path x'' = -omega0^2 x + E0 sin(Omega t), RK4 with substeps
  double x = 0.0, p = 0.0, t = 0.0;
  const int sub = 8;
  const double h = times.dt() / sub;
  auto acc = [&](double xx, double tt) { return -w2 * xx + E0 * std::sin(Omega * tt); };
  const double sigma = 1.0 / std::sqrt(2.0 * omega0);
  bool edge_warned = false;
  for (std::size_t k = 0; k < traj.times.n_slices(); ++k) {
    if (k > 0) {
      for (std::size_t s = 0; s < o.stride * sub; ++s) {
        const double k1x = p, k1p = acc(x, t);
        const double k2x = p + 0.5 * h * k1p, k2p = acc(x + 0.5 * h * k1x, t + 0.5 * h);
        const double k3x = p + 0.5 * h * k2p, k3p = acc(x + 0.5 * h * k2x, t + 0.5 * h);
        const double k4x = p + h * k3p, k4p = acc(x + h * k3x, t + h);
        x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
        p += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
        t += h;
      }
    }
    if (!edge_warned && std::abs(x) + 10.0 * sigma > o.x_max) {
      rep.warnings.push_back("packet within 10 widths of the grid edge at t = " + io::format_double(t));
      edge_warned = true;
    }
    // n0(x_j - x_cl) by four-point Lagrange on the line grid
    double dev = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double xs = (grid.x(j) - x + o.x_max) / grid.spacing();
      const auto i = static_cast<long>(std::floor(xs));
      const double u = xs - static_cast<double>(i);
      auto at = [&](long m) { return m < 0 || m >= static_cast<long>(n0.size()) ? 0.0 : n0[m]; };
      const double shifted = -u * (u - 1) * (u - 2) / 6.0 * at(i - 1) + (u + 1) * (u - 1) * (u - 2) / 2.0 * at(i) -
                             (u + 1) * u * (u - 2) / 2.0 * at(i + 1) + (u + 1) * u * (u - 1) / 6.0 * at(i + 2);
      dev = std::max(dev, std::abs(traj.density[k][j] - shifted));
    }
    rep.times.push_back(traj.times.t(k));
    rep.x_cl.push_back(x);
    rep.deviation.push_back(dev);
    rep.max_deviation = std::max(rep.max_deviation, dev);
  }
  if (std::abs(Omega - omega0) < 1e-3 * omega0)
    rep.warnings.push_back("drive is at resonance; the classical amplitude grows linearly");
  return rep;
}

}  // namespace hhm
