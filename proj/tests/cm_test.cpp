#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "hhm/cm/ermakov.hpp"
#include "hhm/core/errors.hpp"
#include "hhm/rm/radial.hpp"
#include "oracles.hpp"

using namespace hhm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("constant frequency keeps the ground-state width") {
  for (double w : {0.5, 1.0, 2.3}) {
    auto width = solve_ermakov(FrequencyProtocol::constant(w), 2.0, TimeGrid(30.0, 3000));
    for (std::size_t k = 0; k < width.a.size(); ++k) {
      REQUIRE_THAT(width.a[k], WithinAbs(1.0 / std::sqrt(2.0 * w), 1e-10));
      REQUIRE_THAT(width.phidot(k), WithinAbs(1.0 / (2.0 * width.a[k]), 1e-15));
    }
  }
}

TEST_CASE("sudden switch follows the closed-form breathing width") {
  const double M = 2.0;
  auto width = solve_ermakov(FrequencyProtocol::sudden_switch(1.0, 1.2, 0.0), M, TimeGrid(20.0, 20000));
  REQUIRE_THAT(width.a[0], WithinAbs(std::sqrt(0.5), 1e-15));
  REQUIRE(width.adot[0] == 0.0);
  double lo = 1e9, hi = 0.0;
  for (std::size_t k = 0; k < width.a.size(); ++k) {
    const double t = width.times.t(k);
    REQUIRE_THAT(width.a[k] * width.a[k], WithinAbs(oracle::breathing_width_sq(M, 1.0, 1.2, t), 1e-10));
    REQUIRE_THAT(width.adot[k], WithinAbs(oracle::breathing_width_rate(M, 1.0, 1.2, t), 1e-10));
    lo = std::min(lo, width.a[k] * width.a[k]);
    hi = std::max(hi, width.a[k] * width.a[k]);
  }
  REQUIRE_THAT(hi, WithinAbs(0.5, 1e-9));
  REQUIRE_THAT(lo, WithinAbs(0.5 / 1.44, 1e-6));
}

TEST_CASE("a switch inside a step is honoured exactly") {
  // t_switch = 1.23456 is not on the grid; the closed form shifted by t_switch
  const double ts = 1.23456;
  auto width = solve_ermakov(FrequencyProtocol::sudden_switch(1.0, 1.5, ts), 2.0, TimeGrid(6.0, 600));
  for (std::size_t k = 0; k < width.a.size(); ++k) {
    const double t = width.times.t(k);
    const double expected = t < ts ? 0.5 : oracle::breathing_width_sq(2.0, 1.0, 1.5, t - ts);
    REQUIRE_THAT(width.a[k] * width.a[k], WithinAbs(expected, 1e-7));
  }
}

TEST_CASE("RK4 converges at fourth order") {
  auto a_end = [](std::size_t steps) {
    auto w = solve_ermakov(FrequencyProtocol::sudden_switch(1.0, 1.2, 0.0), 2.0, TimeGrid(5.0, steps));
    return w.a.back();
  };
  const double exact = std::sqrt(oracle::breathing_width_sq(2.0, 1.0, 1.2, 5.0));
  const double p = std::log2(std::abs(a_end(50) - exact) / std::abs(a_end(100) - exact));
  REQUIRE(p >= 3.8);
}

TEST_CASE("Ermakov invariants") {
  SECTION("energy-like integral on constant-frequency segments") {
    const auto w = FrequencyProtocol::sudden_switch(1.0, 0.7, 3.0);
    auto width = solve_ermakov(w, 2.0, TimeGrid(10.0, 10000));
    const std::size_t k_sw = 3000;
    const double before = ermakov_energy(width.a[0], width.adot[0], 1.0, 2.0);
    const double after = ermakov_energy(width.a[k_sw + 1], width.adot[k_sw + 1], 0.49, 2.0);
    for (std::size_t k = 0; k < width.a.size(); ++k) {
      if (k <= k_sw)
        REQUIRE_THAT(ermakov_energy(width.a[k], width.adot[k], 1.0, 2.0), WithinAbs(before, 1e-8));
      else
        REQUIRE_THAT(ermakov_energy(width.a[k], width.adot[k], 0.49, 2.0), WithinAbs(after, 1e-8));
    }
  }
  SECTION("Lewis invariant under a continuous drive") {
    const auto w = FrequencyProtocol::sinusoidal(1.0, 0.3, 0.7);  // off parametric resonance
    TimeGrid t(15.0, 15000);
    auto width = solve_ermakov(w, 2.0, t);
    // classical trajectory by an independent RK4 with half the step
    double x = 1.0, v = 0.2;
    const double I0 = lewis_invariant(width.a[0], width.adot[0], x, v, 2.0);
    const double h = 0.5 * t.dt();
    for (std::size_t k = 0; k < t.n_steps(); ++k) {
      for (int sub = 0; sub < 2; ++sub) {
        const double t0 = t.t(k) + sub * h;
        auto acc = [&](double tt, double xx) { return -w.omega_sq(tt) * xx; };
        const double k1x = v, k1v = acc(t0, x);
        const double k2x = v + 0.5 * h * k1v, k2v = acc(t0 + 0.5 * h, x + 0.5 * h * k1x);
        const double k3x = v + 0.5 * h * k2v, k3v = acc(t0 + 0.5 * h, x + 0.5 * h * k2x);
        const double k4x = v + h * k3v, k4v = acc(t0 + h, x + h * k3x);
        x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
        v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
      }
      REQUIRE_THAT(lewis_invariant(width.a[k + 1], width.adot[k + 1], x, v, 2.0), WithinAbs(I0, 1e-8));
    }
  }
}

TEST_CASE("Ermakov width agrees with a direct centre-of-mass propagation") {
  const double M = 2.0;
  const auto w = FrequencyProtocol::sudden_switch(1.0, 1.2, 0.0);
  RadialGrid g(8.0, 801);
  TimeGrid t(20.0, 20000);
  auto gs = solve_ground_state(InteractionSpec::none(), 1.0, M, g);
  auto traj = propagate(gs.wavefunction, InteractionSpec::none(), w, t, {.stride = 200});
  auto width = solve_ermakov(w, M, t);
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.times.n_slices(); ++k) {
    const double a = width.a[k * 200];
    worst = std::max(worst, std::abs(a * a - 2.0 / 3.0 * traj.at(k).mean_s2()));
  }
  INFO("max |a^2 - 2<c^2>/3| = " << worst);
  REQUIRE(worst < 1e-5);
}

TEST_CASE("cm_density values and normalization") {
  TimeGrid one(1.0, 1);
  WidthTrajectory unit{one, 2.0, 1.0, {1.0, 1.0}, {0.0, 0.0}};
  RadialGrid g(8.0, 801);
  auto n = cm_density(unit, g);
  REQUIRE_THAT(n.values(0, 0), WithinRel(std::pow(std::numbers::pi, -1.5), 1e-14));
  REQUIRE_THAT(n.values(0, 0), WithinAbs(0.17959, 1e-5));

  auto width = solve_ermakov(FrequencyProtocol::sudden_switch(1.0, 1.4, 0.5), 2.0, TimeGrid(5.0, 500));
  auto nt = cm_density(width, g);
  for (std::size_t k = 0; k < width.times.n_slices(); ++k)
    REQUIRE_THAT(integrate_radial(nt.values.row(k), g), WithinAbs(1.0, 1e-8));

  // static M = 2, w0 = 1: value at c = 1 against the TDSE ground-state density
  auto stat = cm_density(solve_ermakov(FrequencyProtocol::constant(1.0), 2.0, one), g);
  const std::size_t j1 = 100;  // c = 1
  REQUIRE_THAT(stat.values(0, j1), WithinAbs(std::pow(2.0 / std::numbers::pi, 1.5) * std::exp(-2.0), 1e-12));
  REQUIRE_THAT(stat.values(0, j1), WithinAbs(0.06874, 1e-5));
  auto gs = solve_ground_state(InteractionSpec::none(), 1.0, 2.0, g);
  REQUIRE_THAT(gs.wavefunction.density()[j1], WithinRel(stat.values(0, j1), 1e-6));
}

TEST_CASE("width CSV round trip") {
  auto width = solve_ermakov(FrequencyProtocol::linear_ramp(1.0, 1.3, 2.0), 2.0, TimeGrid(4.0, 40));
  auto dir = std::filesystem::temp_directory_path() / "hhm_cm_test";
  std::filesystem::create_directories(dir);
  write_width(dir / "w.csv", width);
  auto back = read_width(dir / "w.csv");
  REQUIRE(back.a == width.a);
  REQUIRE(back.adot == width.adot);
  REQUIRE(back.mass == width.mass);
  REQUIRE(back.times == width.times);
  std::filesystem::remove_all(dir);
}

TEST_CASE("invalid inputs") {
  REQUIRE_THROWS_AS(solve_ermakov(FrequencyProtocol::constant(0.0), 2.0, TimeGrid(1.0, 10)), ModelInvalidError);
  REQUIRE_THROWS_AS(solve_ermakov(FrequencyProtocol::constant(1.0), 0.0, TimeGrid(1.0, 10)), ModelInvalidError);
}
