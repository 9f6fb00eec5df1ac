#include "hhm/core/stencils.hpp"

#include "hhm/core/errors.hpp"

namespace hhm {
namespace {

// f at index m, reading mirrored ghosts for m < 0.
inline double ghost(std::span<const double> f, long m, Parity parity) {
  if (m >= 0) return f[static_cast<std::size_t>(m)];
  const double v = f[static_cast<std::size_t>(-m)];
  return parity == Parity::even ? v : -v;
}

void check(std::span<const double> f, const RadialGrid& grid, int order) {
  if (f.size() != grid.size()) throw InputShapeError("stencil: field length does not match grid");
  if (order != 2 && order != 4) throw InputShapeError("stencil: order must be 2 or 4");
}

}  // namespace

std::vector<double> radial_d1(std::span<const double> f, const RadialGrid& grid, Parity parity,
                              int order) {
  check(f, grid, order);
  const long n = static_cast<long>(f.size());
  const double h = grid.spacing();
  std::vector<double> d(f.size());
  auto F = [&](long m) { return ghost(f, m, parity); };

  if (order == 2) {
    for (long j = 0; j < n - 1; ++j) d[j] = (F(j + 1) - F(j - 1)) / (2.0 * h);
    const long j = n - 1;
    d[j] = (3.0 * F(j) - 4.0 * F(j - 1) + F(j - 2)) / (2.0 * h);
    return d;
  }
  for (long j = 0; j < n - 2; ++j)
    d[j] = (F(j - 2) - 8.0 * F(j - 1) + 8.0 * F(j + 1) - F(j + 2)) / (12.0 * h);
  {
    const long j = n - 2;
    d[j] = (3.0 * F(j + 1) + 10.0 * F(j) - 18.0 * F(j - 1) + 6.0 * F(j - 2) - F(j - 3)) /
           (12.0 * h);
  }
  {
    const long j = n - 1;
    d[j] = (25.0 * F(j) - 48.0 * F(j - 1) + 36.0 * F(j - 2) - 16.0 * F(j - 3) + 3.0 * F(j - 4)) /
           (12.0 * h);
  }
  return d;
}

std::vector<double> radial_d2(std::span<const double> f, const RadialGrid& grid, Parity parity,
                              int order) {
  check(f, grid, order);
  const long n = static_cast<long>(f.size());
  const double h2 = grid.spacing() * grid.spacing();
  std::vector<double> d(f.size());
  auto F = [&](long m) { return ghost(f, m, parity); };

  if (order == 2) {
    for (long j = 0; j < n - 1; ++j) d[j] = (F(j - 1) - 2.0 * F(j) + F(j + 1)) / h2;
    const long j = n - 1;
    d[j] = (2.0 * F(j) - 5.0 * F(j - 1) + 4.0 * F(j - 2) - F(j - 3)) / h2;
    return d;
  }
  for (long j = 0; j < n - 2; ++j)
    d[j] = (-F(j - 2) + 16.0 * F(j - 1) - 30.0 * F(j) + 16.0 * F(j + 1) - F(j + 2)) / (12.0 * h2);
  {
    const long j = n - 2;
    d[j] = (10.0 * F(j + 1) - 15.0 * F(j) - 4.0 * F(j - 1) + 14.0 * F(j - 2) - 6.0 * F(j - 3) +
            F(j - 4)) /
           (12.0 * h2);
  }
  {
    const long j = n - 1;
    d[j] = (45.0 * F(j) - 154.0 * F(j - 1) + 214.0 * F(j - 2) - 156.0 * F(j - 3) +
            61.0 * F(j - 4) - 10.0 * F(j - 5)) /
           (12.0 * h2);
  }
  return d;
}

std::vector<double> radial_laplacian(std::span<const double> f, const RadialGrid& grid,
                                     int order) {
  auto d1 = radial_d1(f, grid, Parity::even, order);
  auto d2 = radial_d2(f, grid, Parity::even, order);
  std::vector<double> out(f.size());
  out[0] = 3.0 * d2[0];
  for (std::size_t j = 1; j < f.size(); ++j) out[j] = d2[j] + 2.0 * d1[j] / grid.r(j);
  return out;
}

std::vector<double> radial_divergence(std::span<const double> g, const RadialGrid& grid,
                                      int order) {
  auto d1 = radial_d1(g, grid, Parity::odd, order);
  std::vector<double> out(g.size());
  out[0] = 3.0 * d1[0];
  for (std::size_t j = 1; j < g.size(); ++j) out[j] = d1[j] + 2.0 * g[j] / grid.r(j);
  return out;
}

std::vector<double> cumulative_integral(std::span<const double> f, const RadialGrid& grid,
                                        std::optional<Parity> parity) {
  if (f.size() != grid.size()) throw InputShapeError("cumulative_integral: length mismatch");
  return cumulative_integral(f, grid.spacing(), parity);
}

std::vector<double> cumulative_integral(std::span<const double> f, double h,
                                        std::optional<Parity> parity) {
  if (f.size() < 4) throw InputShapeError("cumulative_integral: need at least 4 samples");
  std::vector<double> I(f.size(), 0.0);
  const std::size_t n = f.size();
  // cubic-exact rule on every interval; off-centre at the two end intervals
  for (std::size_t j = 0; j + 1 < n; ++j) {
    double step;
    if (j == 0 && parity)
      step = 13.0 * f[0] + (*parity == Parity::even ? 12.0 : 14.0) * f[1] - f[2];
    else if (j == 0)
      step = 9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3];
    else if (j + 2 == n)
      step = f[j - 2] - 5.0 * f[j - 1] + 19.0 * f[j] + 9.0 * f[j + 1];
    else
      step = -f[j - 1] + 13.0 * f[j] + 13.0 * f[j + 1] - f[j + 2];
    I[j + 1] = I[j] + h / 24.0 * step;
  }
  return I;
}

}  // namespace hhm
