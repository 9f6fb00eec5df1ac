#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "hhm/core/errors.hpp"
#include "hhm/density/assembly.hpp"
#include "hhm/ks/inversion.hpp"
#include "oracles.hpp"

using namespace hhm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

// Two unit-mass electrons in the breathing ground-state Gaussian after a
// switch w0 -> w1 at t = 0: n = 2 a^-3 pi^-3/2 exp(-r^2/a^2).
DensityTrajectory breathing(const RadialGrid& g, const TimeGrid& t, double w1) {
  DensityTrajectory n(g, t);
  for (std::size_t k = 0; k < t.n_slices(); ++k) {
    const double a = std::sqrt(oracle::breathing_width_sq(1.0, 1.0, w1, t.t(k)));
    for (std::size_t j = 0; j < g.size(); ++j)
      n.values(k, j) = 2.0 / (a * a * a * std::pow(pi, 1.5)) * std::exp(-g.r(j) * g.r(j) / (a * a));
  }
  return n;
}

DensityTrajectory replicate(const std::vector<double>& n0, const RadialGrid& g, const TimeGrid& t) {
  DensityTrajectory n(g, t);
  for (std::size_t k = 0; k < t.n_slices(); ++k) std::copy(n0.begin(), n0.end(), n.values.row(k).begin());
  return n;
}

double ratio_rate(double t, double w1) {  // adot / a for the unit-mass breathing width
  const double a2 = oracle::breathing_width_sq(1.0, 1.0, w1, t);
  return oracle::breathing_width_rate(1.0, 1.0, w1, t) / std::sqrt(a2);
}

}  // namespace

TEST_CASE("static density: zero velocity, real orbital, time-independent harmonic well") {
  RadialGrid g(8.0, 401);
  TimeGrid t(0.2, 4);
  std::vector<double> n0(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) n0[j] = 2.0 * std::pow(pi, -1.5) * std::exp(-g.r(j) * g.r(j));
  auto n = replicate(n0, g, t);
  auto v = velocity_field(n);
  for (double x : v.v.flat()) REQUIRE_THAT(x, WithinAbs(0.0, 1e-14));  // one-sided stencils round
  auto orb = build_orbital(n, v);
  for (double x : orb.phase.flat()) REQUIRE_THAT(x, WithinAbs(0.0, 1e-13));
  std::vector<double> amp2(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) amp2[j] = std::norm(orb.phi(0, j));
  REQUIRE_THAT(2.0 * integrate_radial(amp2, g), WithinAbs(2.0, 1e-8));

  auto V = invert_potential(orb);
  for (std::size_t k = 0; k < t.n_slices(); ++k) {
    REQUIRE(V.values(k, 0) == 0.0);
    for (std::size_t j = 0; g.r(j) <= 4.0; ++j) {
      REQUIRE(V.mask(k, j) == 1.0);
      REQUIRE_THAT(V.values(k, j), WithinAbs(0.5 * g.r(j) * g.r(j), 1e-4));
      REQUIRE_THAT(V.values(k, j), WithinAbs(V.values(0, j), 1e-8));
    }
  }
  // off the mask the potential is reported missing
  REQUIRE(V.mask(0, g.size() - 1) == 0.0);
  REQUIRE(std::isnan(V.values(0, g.size() - 1)));
}

TEST_CASE("breathing Gaussian: velocity, phase and potential") {
  RadialGrid g(8.0, 801);  // v to 1e-6 at the mask edge needs h = 0.01
  TimeGrid t(2.0, 400);
  const double w1 = 1.2;
  auto n = breathing(g, t, w1);
  auto v = velocity_field(n);
  auto orb = build_orbital(n, v);
  auto V = invert_potential(orb);

  double v_err = 0.0, a_err = 0.0, V_err = 0.0, flux_err = 0.0;
  for (std::size_t k = 0; k < t.n_slices(); ++k) {
    const double rate = ratio_rate(t.t(k), w1);
    std::size_t jm = 0;
    for (std::size_t j = 0; j < g.size() && v.mask(k, j) == 1.0; ++j) {
      const double r = g.r(j);
      v_err = std::max(v_err, std::abs(v.v(k, j) - rate * r));
      a_err = std::max(a_err, std::abs(orb.phase(k, j) - 0.5 * rate * r * r));
      if (!v.one_sided[k] && r <= 4.0) V_err = std::max(V_err, std::abs(V.values(k, j) - 0.5 * w1 * w1 * r * r));
      jm = j;
    }
    const double r = g.r(jm);
    const double flux = 4.0 * pi * r * r * n.values(k, jm) * v.v(k, jm);
    flux_err = std::max(flux_err, std::abs(flux - 4.0 * pi * r * r * n.values(k, jm) * rate * r));
  }
  INFO("v " << v_err << " alpha " << a_err << " V " << V_err << " flux " << flux_err);
  REQUIRE(v_err < 1e-6);
  REQUIRE(a_err < 1e-6);
  REQUIRE(V_err < 1e-4);
  REQUIRE(flux_err < 1e-10);
  REQUIRE(V.one_sided.front());
  REQUIRE(V.one_sided.back());
}

TEST_CASE("harmonic pair force: static inversion recovers the Gaussian-orbital well") {
  RadialGrid g(8.0, 401);
  TimeGrid t(0.2, 2);
  const double K = 0.2;
  // closed form: n is a Gaussian of width b, whose orbital sits in r^2 / (2 b^4)
  auto exact = moshinsky_density_closed_form(FrequencyProtocol::constant(1.0), K, g, t);
  const double b2 = 0.5 + 0.25 / (0.5 * std::sqrt(1.0 - 2.0 * K));
  auto V = invert_potential(build_orbital(exact, velocity_field(exact)));
  for (std::size_t j = 0; g.r(j) <= 3.0; ++j)
    REQUIRE_THAT(V.values(1, j), WithinAbs(g.r(j) * g.r(j) / (2.0 * b2 * b2), 1e-4));
  const double curvature = 1.0 / (b2 * b2);
  REQUIRE(curvature > 1.0 - 2.0 * K);
  REQUIRE(curvature < 1.0);

  // same from the assembled density
  RadialGrid sg(12.0, 601);
  auto gs = solve_ground_state(InteractionSpec::moshinsky(K), 1.0, 0.5, sg);
  auto n = replicate(static_density(std::sqrt(0.5), gs.wavefunction, g), g, t);
  auto Va = invert_potential(build_orbital(n, velocity_field(n)));
  for (std::size_t j = 0; g.r(j) <= 3.0; ++j) REQUIRE_THAT(Va.values(1, j), WithinAbs(V.values(1, j), 1e-4));
}

TEST_CASE("roundtrip: static and breathing densities close; a corrupted well does not") {
  RadialGrid g(8.0, 401);
  SECTION("static") {
    TimeGrid t(5.0, 50);
    std::vector<double> n0(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) n0[j] = 2.0 * std::pow(pi, -1.5) * std::exp(-g.r(j) * g.r(j));
    auto n = replicate(n0, g, t);
    auto V = invert_potential(build_orbital(n, velocity_field(n)));
    auto rep = repropagate_check(V, n);
    INFO("static mismatch " << rep.max_mismatch);
    REQUIRE(rep.max_mismatch < 1e-6);
  }
  SECTION("harmonic pair force, sudden switch") {
    TimeGrid t(5.0, 500);
    const auto w = FrequencyProtocol::sudden_switch(1.0, 1.2, 0.0);
    auto n = moshinsky_density_closed_form(w, 0.2, g, t);
    auto V = invert_potential(build_orbital(n, velocity_field(n)));
    auto rep = repropagate_check(V, n);
    INFO("dynamic mismatch " << rep.max_mismatch);
    REQUIRE(rep.max_mismatch < 1e-3);

    // gauge: a time-dependent constant only changes the phase
    auto shifted = V;
    for (std::size_t k = 0; k < t.n_slices(); ++k)
      for (double& x : shifted.values.row(k)) x += 3.0 * std::sin(t.t(k));
    auto rep2 = repropagate_check(shifted, n);
    REQUIRE(std::abs(rep2.max_mismatch - rep.max_mismatch) < 1e-12);

    // negative control: V + 0.1 r^2
    auto bad = V;
    for (std::size_t k = 0; k < t.n_slices(); ++k)
      for (std::size_t j = 0; j < g.size(); ++j) bad.values(k, j) += 0.1 * g.r(j) * g.r(j);
    auto rep3 = repropagate_check(bad, n);
    REQUIRE(rep3.mismatch.back() > 1e-2);
    // the detuned breathing beats against the target, so growth is monotone
    // only up to the first maximum (t ~ 1.2)
    for (std::size_t k = 1; t.t(k) <= 1.1; ++k) REQUIRE(rep3.mismatch[k] > rep3.mismatch[k - 1]);
  }
}

TEST_CASE("inversion errors and serialization") {
  RadialGrid g(4.0, 101);
  TimeGrid t(0.2, 2);
  DensityTrajectory zero(g, t);
  REQUIRE_THROWS_AS(velocity_field(zero), DegenerateInputError);
  DensityTrajectory two(g, TimeGrid(0.1, 1));
  REQUIRE_THROWS_AS(velocity_field(two), InsufficientDataError);

  auto n = breathing(g, TimeGrid(0.4, 4), 1.3);
  auto V = invert_potential(build_orbital(n, velocity_field(n)));
  auto dir = std::filesystem::temp_directory_path() / "hhm_ks_test";
  std::filesystem::create_directories(dir);
  write_potential(dir / "V.csv", V);
  auto back = read_potential(dir / "V.csv");
  REQUIRE(back.mask == V.mask);
  REQUIRE(back.one_sided == V.one_sided);
  for (std::size_t i = 0; i < V.values.flat().size(); ++i) {
    const double a = V.values.flat()[i], b = back.values.flat()[i];
    REQUIRE(((std::isnan(a) && std::isnan(b)) || a == b));
  }
  std::filesystem::remove_all(dir);
}
