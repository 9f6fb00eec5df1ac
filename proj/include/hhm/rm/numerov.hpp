#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace hhm {

using complex = std::complex<double>;

/// One-dimensional Hamiltonian H = -(1/2m) d^2/dx^2 + V(x) on the interior
/// nodes of a uniform grid with Dirichlet ends, discretized with the Numerov
/// kinetic operator T = -(1/2m) B^{-1} D2, where D2 = tridiag(1,-2,1)/h^2 and
/// B = tridiag(1,10,1)/12.
///
/// B and D2 commute, so H is real symmetric and Crank-Nicolson with it is
/// exactly unitary; multiplying by B keeps every solve tridiagonal:
///   (B + i dt/2 A) x' = (B - i dt/2 A) x,   A = B H = -(1/2m) D2 + B diag(V).
/// Truncation error of the kinetic term is O(h^4).
class NumerovHamiltonian {
 public:
  NumerovHamiltonian(std::size_t n_interior, double h, double mass);

  std::size_t size() const { return n_; }
  double spacing() const { return h_; }
  double mass() const { return mass_; }

  /// Interior potential values V_1..V_n.
  void set_potential(std::span<const double> v);
  std::span<const double> potential() const { return v_; }

  /// y = H x.
  void apply(std::span<const complex> x, std::span<complex> y) const;
  void apply(std::span<const double> x, std::span<double> y) const;

  /// <x|H|x> / <x|x> for real x.
  double rayleigh(std::span<const double> x) const;
  /// Re <x|H|x> / <x|x>.
  double expectation(std::span<const complex> x) const;

  /// One Crank-Nicolson step in place, x <- (1 + i dt/2 H)^{-1} (1 - i dt/2 H) x.
  void crank_nicolson_step(std::span<complex> x, double dt) const;

  /// One backward-Euler imaginary-time step (not normalized).
  void imaginary_step(std::span<double> x, double dtau) const;

  /// Solve (A - sigma B) x = B y for real y (shifted inverse iteration).
  void shifted_solve(double sigma, std::span<const double> y, std::span<double> x) const;

 private:
  std::size_t n_;
  double h_;
  double mass_;
  double kin_;  // 1 / (2 m h^2)
  std::vector<double> v_;
  mutable std::vector<complex> work_c_;
  mutable std::vector<double> work_r_;
};

struct InteriorEigenpair {
  double energy;
  std::vector<double> vector;  // unit Euclidean norm, sign fixed to positive sum
  int iterations;
};

/// Lowest eigenpair of H by shifted inverse iteration: a fixed shift below
/// min V until the energy settles to 1e-6, then a shift just under the
/// estimate. Throws NumericError with diagnostics on non-convergence.
InteriorEigenpair lowest_eigenpair(const NumerovHamiltonian& H, int max_iterations = 2000,
                                   double tolerance = 1e-14);

/// Thomas algorithm for tridiagonal systems; lower[0] and upper[n-1] unused.
template <class T>
void solve_tridiagonal(std::span<const T> lower, std::span<const T> diag, std::span<const T> upper,
                       std::span<T> rhs, std::span<T> scratch);

}  // namespace hhm
