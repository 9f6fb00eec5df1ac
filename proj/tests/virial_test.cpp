#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "hhm/core/errors.hpp"
#include "hhm/core/io.hpp"
#include "hhm/core/stencils.hpp"
#include "hhm/density/assembly.hpp"
#include "hhm/virial/checks.hpp"
#include "oracles.hpp"

using namespace hhm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

// unit-mass breathing Gaussian pair after w 1 -> w1 at t = 0
DensityTrajectory breathing(const RadialGrid& g, const TimeGrid& t, double w1) {
  DensityTrajectory n(g, t);
  for (std::size_t k = 0; k < t.n_slices(); ++k) {
    const double a = std::sqrt(oracle::breathing_width_sq(1.0, 1.0, w1, t.t(k)));
    for (std::size_t j = 0; j < g.size(); ++j)
      n.values(k, j) = 2.0 / (a * a * a * std::pow(pi, 1.5)) * std::exp(-g.r(j) * g.r(j) / (a * a));
  }
  return n;
}

DensityTrajectory static_gaussian(const RadialGrid& g, const TimeGrid& t) {
  DensityTrajectory n(g, t);
  for (std::size_t k = 0; k < t.n_slices(); ++k)
    for (std::size_t j = 0; j < g.size(); ++j)
      n.values(k, j) = 2.0 * std::pow(pi, -1.5) * std::exp(-g.r(j) * g.r(j));
  return n;
}

// z_r of the breathing pair: (1/a^4 + a'^2/a^2)(4 r n - 2 r^3 n / a^2)
double breathing_z(double r, double t, double w1) {
  const double a2 = oracle::breathing_width_sq(1.0, 1.0, w1, t), a = std::sqrt(a2);
  const double adot = oracle::breathing_width_rate(1.0, 1.0, w1, t);
  const double n = 2.0 / (a2 * a * std::pow(pi, 1.5)) * std::exp(-r * r / a2);
  return (1.0 / (a2 * a2) + adot * adot / a2) * (4.0 * r * n - 2.0 * r * r * r * n / a2);
}

ResidualOptions inner(double r_eval = 4.0) {
  ResidualOptions o;
  o.r_eval = r_eval;
  return o;
}

ResidualField continuity_at(double h, double dt, double scale = 1.0) {
  RadialGrid g(8.0, static_cast<std::size_t>(std::lround(8.0 / h)) + 1);
  TimeGrid t(1.0, static_cast<std::size_t>(std::lround(1.0 / dt)));
  auto n = breathing(g, t, 1.2);
  auto v = velocity_field(n);
  for (double& x : v.v.flat()) x *= scale;
  return continuity_residual(n, v, inner());
}

ResidualField dvt_breathing_at(double h, double dt, double corrupt = 0.0) {
  RadialGrid g(8.0, static_cast<std::size_t>(std::lround(8.0 / h)) + 1);
  TimeGrid t(1.0, static_cast<std::size_t>(std::lround(1.0 / dt)));
  auto n = breathing(g, t, 1.2);
  auto orb = build_orbital(n, velocity_field(n));
  auto z = kinetic_vector_field(orb);
  auto V = external_potential(FrequencyProtocol::sudden_switch(1.0, 1.2, 0.0), g, t);
  for (std::size_t k = 0; k < t.n_slices(); ++k)
    for (std::size_t j = 0; j < g.size(); ++j) V.values(k, j) += corrupt * g.r(j) * g.r(j);
  return dvt_residual_ks(n, z, V, inner());
}

struct PairSetup {
  WidthTrajectory width;
  WavefunctionTrajectory rm;
};

// CM (mass 2) and relative (mass 1/2) parts on a common snapshot grid
PairSetup pair_setup(double K, const FrequencyProtocol& w, double s_h, const TimeGrid& fine, std::size_t stride) {
  RadialGrid sg(12.0, static_cast<std::size_t>(std::lround(12.0 / s_h)) + 1);
  const auto u = InteractionSpec::moshinsky(K);
  auto gs = solve_ground_state(u, w.omega0, 0.5, sg);
  return {solve_ermakov(w, 2.0, fine), propagate(gs.wavefunction, u, w, fine, {.stride = stride})};
}

// F_r(r) = -2K int d^3r' |Psi(r, r')|^2 (r - r').r_hat for the static
// Gaussian pair, by plain 3D quadrature over r' (axisymmetric).
double brute_force_r(double r, double K) {
  const double M = 2.0, mu = 0.5, wt = std::sqrt(1.0 - 2.0 * K);
  const double bc = M * 1.0, br = mu * wt;  // |psi|^2 ~ exp(-b x^2)
  std::vector<double> rx, rw, cx, cw;
  oracle::gauss_legendre(120, 0.0, 10.0, rx, rw);
  oracle::gauss_legendre(64, -1.0, 1.0, cx, cw);
  double f = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i)
    for (std::size_t m = 0; m < cx.size(); ++m) {
      const double rp = rx[i], c = cx[m];
      // r along z, r' at angle acos(c)
      const double sx = -rp * std::sqrt(1.0 - c * c), sz = r - rp * c;  // s = r - r'
      const double Cx = 0.5 * rp * std::sqrt(1.0 - c * c), Cz = 0.5 * (r + rp * c);
      const double s2 = sx * sx + sz * sz, C2 = Cx * Cx + Cz * Cz;
      const double psi2 = std::pow(bc / pi, 1.5) * std::exp(-bc * C2) * std::pow(br / pi, 1.5) * std::exp(-br * s2);
      f += rw[i] * cw[m] * 2.0 * pi * rp * rp * 2.0 * psi2 * (-K) * sz;
    }
  return f;
}

}  // namespace

TEST_CASE("continuity: static density with zero velocity") {
  RadialGrid g(8.0, 401);
  TimeGrid t(0.2, 4);
  auto n = static_gaussian(g, t);
  auto v = velocity_field(n);
  auto res = continuity_residual(n, v);
  REQUIRE(res.max_linf(false) < 1e-13);
}

TEST_CASE("continuity: breathing refinement and scaled-velocity control") {
  const auto coarse = continuity_at(0.04, 0.02);
  const auto fine = continuity_at(0.02, 0.01);
  const double rate = coarse.max_l2() / fine.max_l2();
  INFO("coarse " << coarse.max_l2() << " fine " << fine.max_l2());
  REQUIRE(rate >= 3.5);
  const auto bad = continuity_at(0.02, 0.01, 1.1);
  REQUIRE(bad.max_l2() >= 10.0 * fine.max_l2());
  for (double x : fine.l2) REQUIRE(x >= 0.0);
}

TEST_CASE("static Gaussian orbital: kinetic vector field and the static identity") {
  RadialGrid g(8.0, 401);
  TimeGrid t(0.2, 4);
  auto n = static_gaussian(g, t);
  auto orb = build_orbital(n, velocity_field(n));
  auto z = kinetic_vector_field(orb);
  auto z_dens = kinetic_vector_field_static(n);
  double zmax = 0.0;
  for (double x : z.z.flat()) zmax = std::max(zmax, std::abs(x));
  for (std::size_t j = 0; g.r(j) <= 4.0; ++j) {
    const double r = g.r(j), nn = n.values(0, j);
    REQUIRE_THAT(z.z(0, j), WithinAbs(4.0 * r * nn - 2.0 * r * r * r * nn, 1e-6 * zmax));
    REQUIRE_THAT(z.z(0, j), WithinAbs(z_dens.z(0, j), 1e-6 * zmax));
  }
  REQUIRE(z.z(0, 0) == 0.0);

  auto V = external_potential(FrequencyProtocol::constant(1.0), g, t);
  auto res = dvt_residual_ks(n, z, V, inner());
  INFO("static residual " << res.max_linf(false));
  REQUIRE(res.max_linf(false) < 1e-5);

  // a global phase leaves z untouched
  auto shifted = orb;
  for (double& a : shifted.phase.flat()) a += 0.7;
  auto z2 = kinetic_vector_field(shifted);
  for (std::size_t i = 0; i < z.z.flat().size(); ++i)
    REQUIRE_THAT(z2.z.flat()[i], WithinAbs(z.z.flat()[i], 1e-12));
}

TEST_CASE("breathing orbital: z matches the closed form") {
  RadialGrid g(8.0, 401);
  TimeGrid t(1.0, 100);
  auto n = breathing(g, t, 1.2);
  auto z = kinetic_vector_field(build_orbital(n, velocity_field(n)));
  for (std::size_t k : {10u, 50u, 90u})
    for (std::size_t j = 0; g.r(j) <= 4.0; j += 10)
      REQUIRE_THAT(z.z(k, j), WithinAbs(breathing_z(g.r(j), t.t(k), 1.2), 1e-5));
}

TEST_CASE("KS identity under breathing: refinement order and corrupted potential") {
  const auto coarse = dvt_breathing_at(0.04, 0.02);
  const auto fine = dvt_breathing_at(0.02, 0.01);
  const double order = std::log2(coarse.max_l2() / fine.max_l2());
  INFO("coarse " << coarse.max_l2() << " fine " << fine.max_l2() << " order " << order);
  REQUIRE(order >= 1.5);
  const auto bad = dvt_breathing_at(0.02, 0.01, 0.1);
  REQUIRE(bad.max_l2() >= 10.0 * fine.max_l2());
}

TEST_CASE("pair-force term: brute-force quadrature and symmetry") {
  const double K = 0.2;
  TimeGrid fine(0.1, 10);
  auto p = pair_setup(K, FrequencyProtocol::constant(1.0), 0.02, fine, 5);
  RadialGrid g(6.0, 301);
  auto F = interaction_force_term(p.width, p.rm, InteractionSpec::moshinsky(K), g);
  REQUIRE_THAT(F.force(0, 0), WithinAbs(0.0, 1e-15));
  const double d = 1e-3;
  for (double r : {0.5, 1.0, 1.5, 2.0}) {
    const auto j = static_cast<std::size_t>(std::lround(r / g.spacing()));
    const double fp = brute_force_r(r + d, K), fm = brute_force_r(r - d, K);
    const double div = ((r + d) * (r + d) * fp - (r - d) * (r - d) * fm) / (2.0 * d * r * r);
    REQUIRE_THAT(F.force(0, j), WithinRel(brute_force_r(r, K), 1e-3));
    REQUIRE_THAT(F.divergence(0, j), WithinRel(div, 1e-3));
  }
  // divergence agrees with differentiating the force field
  const auto fd = radial_divergence(F.force.row(0), g);
  for (std::size_t j = 0; g.r(j) <= 4.0; ++j) REQUIRE_THAT(F.divergence(0, j), WithinAbs(fd[j], 1e-7));

  auto zero = interaction_force_term(p.width, p.rm, InteractionSpec::moshinsky(0.0), g);
  for (double x : zero.divergence.flat()) REQUIRE(x == 0.0);
  REQUIRE_THROWS_AS(interaction_force_term(p.width, p.rm, InteractionSpec::softened_coulomb(1, 1), g),
                    UnsupportedScopeError);
}

TEST_CASE("interacting z at K = 0 reduces to the independent-electron field") {
  // after a switch 1 -> 1.2 each electron breathes independently
  const auto w = FrequencyProtocol::sudden_switch(1.0, 1.2, 0.0);
  TimeGrid fine(1.0, 1000);
  auto p = pair_setup(0.0, w, 0.02, fine, 250);
  RadialGrid g(6.0, 301);
  auto z = interacting_kinetic_vector_field(p.width, p.rm, g);
  for (std::size_t k = 0; k < z.times.n_slices(); ++k)
    for (std::size_t j = 0; g.r(j) <= 4.0; j += 5)
      REQUIRE_THAT(z.z(k, j), WithinAbs(breathing_z(g.r(j), z.times.t(k), 1.2), 2e-5));
}

TEST_CASE("static Moshinsky: interacting identity, refinement, K = 0 reduction") {
  auto residual = [](double K, double h) {
    const auto w = FrequencyProtocol::constant(1.0);
    TimeGrid fine(0.2, 20);
    auto p = pair_setup(K, w, h, fine, 5);
    RadialGrid g(8.0, static_cast<std::size_t>(std::lround(8.0 / h)) + 1);
    auto n = assemble_density(p.width, p.rm, g);
    auto z = interacting_kinetic_vector_field(p.width, p.rm, g);
    auto F = interaction_force_term(p.width, p.rm, InteractionSpec::moshinsky(K), g);
    auto V = external_potential(w, g, n.times);
    auto res = dvt_residual_interacting(n, z, F, V, inner());
    auto ks = dvt_residual_ks(n, z, V, inner());
    return std::pair{res, ks};
  };
  const auto [fine, fine_ks] = residual(0.2, 0.02);
  INFO("static interacting residual " << fine.max_linf(false));
  REQUIRE(fine.max_linf(false) < 1e-3);
  const auto [coarse, coarse_ks] = residual(0.2, 0.04);
  INFO("coarse " << coarse.max_l2(false) << " fine " << fine.max_l2(false));
  REQUIRE(coarse.max_l2(false) >= 3.0 * fine.max_l2(false));

  const auto [free, free_ks] = residual(0.0, 0.04);
  for (std::size_t i = 0; i < free.residual.flat().size(); ++i) {
    const double a = free.residual.flat()[i], b = free_ks.residual.flat()[i];
    REQUIRE(std::isnan(a) == std::isnan(b));
    if (!std::isnan(a)) REQUIRE_THAT(a, WithinAbs(b, 1e-10));
  }
}

TEST_CASE("harmonic potential theorem and its anharmonic control") {
  TimeGrid t(30.0, 6000);
  auto still = hpt_check(1.0, 0.0, 0.7, t);
  REQUIRE(still.max_deviation < 1e-10);
  auto driven = hpt_check(1.0, 0.1, 0.7, t);
  INFO("driven deviation " << driven.max_deviation);
  REQUIRE(driven.max_deviation < 1e-4);
  REQUIRE(driven.warnings.empty());
  double peak = 0.0;
  for (double x : driven.x_cl) peak = std::max(peak, std::abs(x));
  REQUIRE(peak > 0.1);  // the packet actually moves

  HptOptions anh;
  anh.anharmonic = 0.05;
  auto control = hpt_check(1.0, 0.1, 0.7, TimeGrid(10.0, 2000), anh);
  REQUIRE(control.max_deviation > 1e-2);

  auto res = hpt_check(1.0, 0.5, 1.0, TimeGrid(60.0, 6000));
  REQUIRE_FALSE(res.warnings.empty());
}

TEST_CASE("residual report JSON and input errors") {
  RadialGrid g(8.0, 201);
  TimeGrid t(0.2, 4);
  auto n = static_gaussian(g, t);
  auto z = kinetic_vector_field_static(n);
  auto V = external_potential(FrequencyProtocol::constant(1.0), g, t);
  auto res = dvt_residual_ks(n, z, V);
  const auto path = std::filesystem::temp_directory_path() / "hhm_residual.json";
  write_residual_report(path, res);
  auto j = io::read_json(path);
  REQUIRE(j["identity"] == "dvt_ks");
  REQUIRE(j["l2"].size() == t.n_slices());
  REQUIRE_THAT(j["max_linf"].get<double>(), WithinAbs(res.max_linf(), 1e-15));

  auto other = external_potential(FrequencyProtocol::constant(1.0), RadialGrid(8.0, 101), t);
  REQUIRE_THROWS_AS(dvt_residual_ks(n, z, other), InputShapeError);

  const auto csv = std::filesystem::temp_directory_path() / "hhm_conv.csv";
  write_convergence_csv(csv, {{0.04, 0.02, 1e-3}, {0.02, 0.01, 2.5e-4}});
  REQUIRE(std::filesystem::file_size(csv) > 0);
}
