#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "hhm/core/errors.hpp"
#include "hhm/rm/line.hpp"
#include "hhm/rm/radial.hpp"
#include "oracles.hpp"

using namespace hhm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> interior_potential(const InteractionSpec& u, double w0, double mass,
                                       const RadialGrid& g) {
  std::vector<double> v(g.size() - 2);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double s = g.r(i + 1);
    v[i] = 0.5 * mass * w0 * w0 * s * s + u(s);
  }
  return v;
}

}  // namespace

TEST_CASE("ground state of the bare relative-motion oscillator") {
  RadialGrid g(12.0, 601);
  auto gs = solve_ground_state(InteractionSpec::none(), 1.0, 0.5, g);
  REQUIRE_THAT(gs.energy, WithinAbs(1.5, 1e-6));
  REQUIRE_THAT(gs.wavefunction.norm(), WithinAbs(1.0, 1e-12));
  REQUIRE(gs.wavefunction.chi.front() == 0.0);
  for (const auto& c : gs.wavefunction.chi) {
    REQUIRE(c.imag() == 0.0);
    REQUIRE(c.real() >= 0.0);
  }
}

TEST_CASE("moshinsky ground state: shifted frequency and dense oracle") {
  RadialGrid g(12.0, 1001);
  const auto u = InteractionSpec::moshinsky(0.2);
  auto gs = solve_ground_state(u, 1.0, 0.5, g);
  REQUIRE_THAT(gs.energy, WithinAbs(1.5 * std::sqrt(0.6), 1e-6));
  const auto spectrum = oracle::dense_numerov_spectrum(interior_potential(u, 1.0, 0.5, g), g.spacing(), 0.5);
  REQUIRE_THAT(gs.energy, WithinRel(spectrum(0), 1e-8));
}

TEST_CASE("softened Coulomb ground state is bracketed and matches the dense oracle") {
  RadialGrid g(12.0, 2000);
  const auto u = InteractionSpec::softened_coulomb(1.0, 1.0);
  auto gs = solve_ground_state(u, 1.0, 0.5, g);

  const auto spectrum = oracle::dense_numerov_spectrum(interior_potential(u, 1.0, 0.5, g), g.spacing(), 0.5);
  REQUIRE_THAT(gs.energy, WithinRel(spectrum(0), 1e-8));

  // Gaussian trial psi ~ exp(-b s^2/2): <T> = 3b/(4 mu), <s^2/4> = 3/(8b),
  // <u> by quadrature; minimize over b on a fine scan.
  double best = 1e300;
  for (double b = 0.2; b < 1.2; b += 0.001) {
    const double norm = 4.0 * std::numbers::pi * oracle::integrate(
        [&](double s) { return s * s * std::exp(-b * s * s); }, 0.0, 12.0);
    const double uu = 4.0 * std::numbers::pi * oracle::integrate(
        [&](double s) { return s * s * std::exp(-b * s * s) * u(s); }, 0.0, 12.0) / norm;
    best = std::min(best, 3.0 * b / 2.0 + 3.0 / (8.0 * b) + uu);
  }
  REQUIRE(gs.energy <= best + 1e-9);
  REQUIRE(gs.energy > 1.5);  // u > 0 raises the bare oscillator level
}

TEST_CASE("imaginary-time propagation reproduces the inverse-iteration ground state") {
  RadialGrid g(10.0, 501);
  const auto u = InteractionSpec::softened_coulomb(0.7, 0.5);
  auto gs = solve_ground_state(u, 1.2, 0.5, g);

  std::vector<double> v(g.size(), 0.0);
  auto pot = interior_potential(u, 1.2, 0.5, g);
  std::copy(pot.begin(), pot.end(), v.begin() + 1);
  auto H = radial_hamiltonian(g, 0.5, v);
  std::vector<double> x(H.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::exp(-0.1 * g.r(i + 1)) * g.r(i + 1);
  for (int step = 0; step < 1500; ++step) {
    H.imaginary_step(x, 0.05);
    double nrm = 0.0;
    for (double a : x) nrm += a * a;
    for (double& a : x) a /= std::sqrt(nrm);
  }
  REQUIRE_THAT(H.rayleigh(x), WithinRel(gs.energy, 1e-10));
}

TEST_CASE("unbound moshinsky relative motion is refused") {
  RadialGrid g(10.0, 201);
  REQUIRE_THROWS_AS(solve_ground_state(InteractionSpec::moshinsky(0.6), 1.0, 0.5, g), ModelInvalidError);
  auto gs = solve_ground_state(InteractionSpec::moshinsky(0.45), 1.0, 0.5, g);
  // switching down to omega = 0.9 makes 0.81 - 0.9 < 0
  REQUIRE_THROWS_AS(propagate(gs.wavefunction, InteractionSpec::moshinsky(0.45),
                              FrequencyProtocol::sudden_switch(1.0, 0.9, 0.5), TimeGrid(1.0, 100)),
                    ModelInvalidError);
}

TEST_CASE("stationary state keeps its modulus and advances its phase") {
  RadialGrid g(12.0, 601);
  const auto u = InteractionSpec::moshinsky(0.1);
  auto gs = solve_ground_state(u, 1.0, 0.5, g);
  TimeGrid t(5.0, 500);
  auto traj = propagate(gs.wavefunction, u, FrequencyProtocol::constant(1.0), t, {.stride = 100});
  const std::size_t j = 60;  // s = 1.2
  for (std::size_t k = 0; k < traj.times.n_slices(); ++k) {
    for (std::size_t i = 0; i < g.size(); ++i)
      REQUIRE_THAT(std::abs(traj.chi[k][i]), WithinAbs(gs.wavefunction.chi[i].real(), 1e-8));
    // Crank-Nicolson phase: exp(-2i atan(E dt / 2) / dt * t)
    const double phase = -2.0 * std::atan(0.5 * gs.energy * t.dt()) / t.dt() * traj.times.t(k);
    const complex expected = gs.wavefunction.chi[j] * std::polar(1.0, phase);
    REQUIRE_THAT(std::abs(traj.chi[k][j] - expected), WithinAbs(0.0, 1e-8));
    REQUIRE_THAT(std::arg(traj.chi[k][j]), WithinAbs(std::remainder(-gs.energy * traj.times.t(k), 2 * std::numbers::pi), 5e-4));
  }
}

TEST_CASE("sudden switch breathing of <s^2> follows the closed-form width") {
  RadialGrid g(12.0, 601);
  auto gs = solve_ground_state(InteractionSpec::none(), 1.0, 0.5, g);
  TimeGrid t(5.0, 10000);  // CN phase error dominates, O(dt^2 t)
  auto traj = propagate(gs.wavefunction, InteractionSpec::none(),
                        FrequencyProtocol::sudden_switch(1.0, 1.2, 0.0), t, {.stride = 25});
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.times.n_slices(); ++k) {
    const double asq = oracle::breathing_width_sq(0.5, 1.0, 1.2, traj.times.t(k));
    worst = std::max(worst, std::abs(traj.at(k).mean_s2() - 1.5 * asq));
  }
  REQUIRE(worst < 1e-5);
  // period pi / omega1: back to the initial width
  const std::size_t k_period = static_cast<std::size_t>(std::lround(std::numbers::pi / 1.2 / traj.times.dt()));
  REQUIRE_THAT(traj.at(k_period).mean_s2(), WithinAbs(3.0, 2e-3));
}

TEST_CASE("unitarity over 10^4 steps under a time-dependent protocol") {
  RadialGrid g(12.0, 601);
  const auto u = InteractionSpec::softened_coulomb(1.0, 1.0);
  auto gs = solve_ground_state(u, 1.0, 0.5, g);
  TimeGrid t(100.0, 10000);
  auto traj = propagate(gs.wavefunction, u, FrequencyProtocol::sinusoidal(1.0, 0.2, 1.7), t);
  for (std::size_t k = 0; k < traj.times.n_slices(); k += 1)
    REQUIRE_THAT(traj.at(k).norm(), WithinAbs(1.0, 1e-9));
}

TEST_CASE("energy is conserved for a time-independent protocol") {
  RadialGrid g(12.0, 601);
  const auto u = InteractionSpec::moshinsky(0.2);
  auto gs = solve_ground_state(u, 1.0, 0.5, g);
  const auto w = FrequencyProtocol::constant(1.3);  // start away from the eigenstate
  auto V = relative_motion_potential(u, w, 0.5);
  TimeGrid t(50.0, 5000);
  auto traj = propagate(gs.wavefunction, V, t, {.stride = 500});
  const double e0 = radial_energy(traj.at(0), V, 0.0);
  for (std::size_t k = 1; k < traj.times.n_slices(); ++k)
    REQUIRE(std::abs(radial_energy(traj.at(k), V, 0.0) - e0) / e0 < 1e-7);
}

TEST_CASE("Crank-Nicolson order in dt of <s^2>(t_final)") {
  RadialGrid g(12.0, 601);
  auto gs = solve_ground_state(InteractionSpec::none(), 1.0, 0.5, g);
  auto s2 = [&](std::size_t steps) {
    auto traj = propagate(gs.wavefunction, InteractionSpec::none(),
                          FrequencyProtocol::sudden_switch(1.0, 1.2, 0.0), TimeGrid(4.0, steps),
                          {.stride = steps});
    return traj.at(1).mean_s2();
  };
  const double a = s2(100), b = s2(200), c = s2(400);
  REQUIRE(std::log2(std::abs(a - b) / std::abs(b - c)) >= 1.8);
}

TEST_CASE("line propagator: stationary ground state and unitarity") {
  LineGrid g(8.0, 801);
  LinePotential V = [](double x, double) { return 0.5 * x * x; };
  auto psi = line_ground_state(V, g);
  TimeGrid t(10.0, 1000);
  auto traj = propagate_cartesian_1d(psi, V, t, 100);
  const auto n0 = psi.density();
  for (std::size_t k = 0; k < traj.density.size(); ++k) {
    REQUIRE_THAT(traj.norm[k], WithinAbs(1.0, 1e-9));
    for (std::size_t j = 0; j < n0.size(); ++j) REQUIRE_THAT(traj.density[k][j], WithinAbs(n0[j], 1e-10));
  }
  // analytic Gaussian ground state
  for (std::size_t j = 0; j < n0.size(); ++j)
    REQUIRE_THAT(n0[j], WithinAbs(std::exp(-g.x(j) * g.x(j)) / std::sqrt(std::numbers::pi), 1e-7));
}
