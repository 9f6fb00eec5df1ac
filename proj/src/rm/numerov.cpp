#include "hhm/rm/numerov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hhm/core/errors.hpp"

namespace hhm {

template <class T>
void solve_tridiagonal(std::span<const T> lower, std::span<const T> diag, std::span<const T> upper,
                       std::span<T> rhs, std::span<T> scratch) {
  const std::size_t n = diag.size();
  T beta = diag[0];
  if (beta == T(0)) throw NumericError("tridiagonal solve: zero pivot");
  rhs[0] /= beta;
  for (std::size_t i = 1; i < n; ++i) {
    scratch[i] = upper[i - 1] / beta;
    beta = diag[i] - lower[i] * scratch[i];
    if (beta == T(0)) throw NumericError("tridiagonal solve: zero pivot");
    rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= scratch[i + 1] * rhs[i + 1];
}

template void solve_tridiagonal<double>(std::span<const double>, std::span<const double>,
                                        std::span<const double>, std::span<double>,
                                        std::span<double>);
template void solve_tridiagonal<complex>(std::span<const complex>, std::span<const complex>,
                                         std::span<const complex>, std::span<complex>,
                                         std::span<complex>);

NumerovHamiltonian::NumerovHamiltonian(std::size_t n_interior, double h, double mass)
    : n_(n_interior), h_(h), mass_(mass), kin_(1.0 / (2.0 * mass * h * h)), v_(n_interior, 0.0) {
  if (n_ < 3) throw InputShapeError("numerov: need at least 3 interior nodes");
  if (!(h > 0.0) || !(mass > 0.0)) throw InputShapeError("numerov: spacing and mass must be > 0");
  work_c_.resize(5 * n_);
  work_r_.resize(5 * n_);
}

void NumerovHamiltonian::set_potential(std::span<const double> v) {
  if (v.size() != n_) throw InputShapeError("numerov: potential length mismatch");
  v_.assign(v.begin(), v.end());
}

namespace {

// y = A x with A = -(1/2m) D2 + B diag(V); Dirichlet zeros outside.
template <class T>
void apply_A(std::span<const T> x, std::span<T> y, std::span<const double> v, double kin) {
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    const T xm = i > 0 ? x[i - 1] : T(0);
    const T xp = i + 1 < n ? x[i + 1] : T(0);
    const double vm = i > 0 ? v[i - 1] : 0.0;
    const double vp = i + 1 < n ? v[i + 1] : 0.0;
    y[i] = kin * (2.0 * x[i] - xm - xp) + (vm * xm + 10.0 * v[i] * x[i] + vp * xp) / 12.0;
  }
}

template <class T>
void apply_B(std::span<const T> x, std::span<T> y) {
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    const T xm = i > 0 ? x[i - 1] : T(0);
    const T xp = i + 1 < n ? x[i + 1] : T(0);
    y[i] = (xm + 10.0 * x[i] + xp) / 12.0;
  }
}

template <class T>
void solve_B(std::span<T> rhs, std::span<T> lower, std::span<T> diag, std::span<T> upper,
             std::span<T> scratch) {
  const std::size_t n = rhs.size();
  for (std::size_t i = 0; i < n; ++i) {
    lower[i] = T(1.0 / 12.0);
    diag[i] = T(10.0 / 12.0);
    upper[i] = T(1.0 / 12.0);
  }
  solve_tridiagonal<T>(lower, diag, upper, rhs, scratch);
}

}  // namespace

void NumerovHamiltonian::apply(std::span<const complex> x, std::span<complex> y) const {
  std::span<complex> w(work_c_);
  apply_A<complex>(x, y, v_, kin_);
  solve_B<complex>(y, w.subspan(0, n_), w.subspan(n_, n_), w.subspan(2 * n_, n_),
                   w.subspan(3 * n_, n_));
}

void NumerovHamiltonian::apply(std::span<const double> x, std::span<double> y) const {
  std::span<double> w(work_r_);
  apply_A<double>(x, y, v_, kin_);
  solve_B<double>(y, w.subspan(0, n_), w.subspan(n_, n_), w.subspan(2 * n_, n_),
                  w.subspan(3 * n_, n_));
}

double NumerovHamiltonian::rayleigh(std::span<const double> x) const {
  std::vector<double> hx(n_);
  apply(x, std::span<double>(hx));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    num += x[i] * hx[i];
    den += x[i] * x[i];
  }
  return num / den;
}

double NumerovHamiltonian::expectation(std::span<const complex> x) const {
  std::vector<complex> hx(n_);
  apply(x, std::span<complex>(hx));
  complex num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    num += std::conj(x[i]) * hx[i];
    den += std::norm(x[i]);
  }
  return num.real() / den;
}

void NumerovHamiltonian::crank_nicolson_step(std::span<complex> x, double dt) const {
  const complex tau(0.0, 0.5 * dt);
  std::span<complex> w(work_c_);
  auto rhs = w.subspan(0, n_);
  auto lower = w.subspan(n_, n_);
  auto diag = w.subspan(2 * n_, n_);
  auto upper = w.subspan(3 * n_, n_);
  auto scratch = w.subspan(4 * n_, n_);

  // rhs = (B - tau A) x
  for (std::size_t i = 0; i < n_; ++i) {
    const complex xm = i > 0 ? x[i - 1] : complex(0);
    const complex xp = i + 1 < n_ ? x[i + 1] : complex(0);
    const double vm = i > 0 ? v_[i - 1] : 0.0;
    const double vp = i + 1 < n_ ? v_[i + 1] : 0.0;
    const complex bx = (xm + 10.0 * x[i] + xp) / 12.0;
    const complex ax = kin_ * (2.0 * x[i] - xm - xp) + (vm * xm + 10.0 * v_[i] * x[i] + vp * xp) / 12.0;
    rhs[i] = bx - tau * ax;
  }
  // (B + tau A): row i couples to i-1 and i+1
  for (std::size_t i = 0; i < n_; ++i) {
    diag[i] = 10.0 / 12.0 + tau * (2.0 * kin_ + 10.0 * v_[i] / 12.0);
    lower[i] = i > 0 ? 1.0 / 12.0 + tau * (-kin_ + v_[i - 1] / 12.0) : complex(0);
    upper[i] = i + 1 < n_ ? 1.0 / 12.0 + tau * (-kin_ + v_[i + 1] / 12.0) : complex(0);
  }
  solve_tridiagonal<complex>(lower, diag, upper, rhs, scratch);
  for (std::size_t i = 0; i < n_; ++i) x[i] = rhs[i];
}

void NumerovHamiltonian::imaginary_step(std::span<double> x, double dtau) const {
  // backward Euler: damps the stiff high-k modes that Crank-Nicolson would not
  const double tau = dtau;
  std::span<double> w(work_r_);
  auto rhs = w.subspan(0, n_);
  auto lower = w.subspan(n_, n_);
  auto diag = w.subspan(2 * n_, n_);
  auto upper = w.subspan(3 * n_, n_);
  auto scratch = w.subspan(4 * n_, n_);
  apply_B<double>(x, rhs);
  for (std::size_t i = 0; i < n_; ++i) {
    diag[i] = 10.0 / 12.0 + tau * (2.0 * kin_ + 10.0 * v_[i] / 12.0);
    lower[i] = i > 0 ? 1.0 / 12.0 + tau * (-kin_ + v_[i - 1] / 12.0) : 0.0;
    upper[i] = i + 1 < n_ ? 1.0 / 12.0 + tau * (-kin_ + v_[i + 1] / 12.0) : 0.0;
  }
  solve_tridiagonal<double>(lower, diag, upper, rhs, scratch);
  for (std::size_t i = 0; i < n_; ++i) x[i] = rhs[i];
}

void NumerovHamiltonian::shifted_solve(double sigma, std::span<const double> y,
                                       std::span<double> x) const {
  std::span<double> w(work_r_);
  auto lower = w.subspan(n_, n_);
  auto diag = w.subspan(2 * n_, n_);
  auto upper = w.subspan(3 * n_, n_);
  auto scratch = w.subspan(4 * n_, n_);
  apply_B<double>(y, x);
  for (std::size_t i = 0; i < n_; ++i) {
    diag[i] = 2.0 * kin_ + 10.0 * (v_[i] - sigma) / 12.0;
    lower[i] = i > 0 ? -kin_ + (v_[i - 1] - sigma) / 12.0 : 0.0;
    upper[i] = i + 1 < n_ ? -kin_ + (v_[i + 1] - sigma) / 12.0 : 0.0;
  }
  solve_tridiagonal<double>(lower, diag, upper, x, scratch);
}

InteriorEigenpair lowest_eigenpair(const NumerovHamiltonian& H, int max_iterations,
                                   double tolerance) {
  const std::size_t n = H.size();
  const auto v = H.potential();
  // The Numerov kinetic operator is positive definite, so anything below
  // min V lies under the whole spectrum.
  double sigma = *std::min_element(v.begin(), v.end()) - 1.0;

  std::vector<double> x(n, 1.0), y(n);
  double energy = H.rayleigh(x);
  double change = 0.0;
  bool refined = false;
  int it = 0;
  bool converged = false;
  while (it < max_iterations && !converged) {
    ++it;
    H.shifted_solve(sigma, x, y);
    double nrm = 0.0;
    for (double a : y) nrm += a * a;
    nrm = std::sqrt(nrm);
    if (!std::isfinite(nrm) || nrm == 0.0)
      throw NumericError("eigensolve: inverse iteration broke down");
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / nrm;
    const double e_new = H.rayleigh(x);
    change = std::abs(e_new - energy);
    energy = e_new;
    const double scale = 1.0 + std::abs(energy);
    if (!refined && change < 1e-6 * scale) {
      sigma = energy - 1e-5 * scale;
      refined = true;
    } else if (refined && change < tolerance * scale) {
      converged = true;
    }
  }
  if (!converged) {
    std::ostringstream os;
    os << "eigensolve: inverse iteration did not converge after " << it
       << " iterations (last energy change " << change << ", energy " << energy << ")";
    throw NumericError(os.str());
  }
  double sum = 0.0;
  for (double a : x) sum += a;
  if (sum < 0.0)
    for (double& a : x) a = -a;
  return {energy, std::move(x), it};
}

}  // namespace hhm
