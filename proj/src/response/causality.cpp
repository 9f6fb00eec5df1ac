#include "hhm/response/causality.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "hhm/core/errors.hpp"
#include "hhm/core/io.hpp"
#include "hhm/core/parallel.hpp"
#include "hhm/rm/radial.hpp"

namespace hhm {
namespace {

using Mat = std::vector<double>;  // row-major d x d

// acc += B x
void mat_vec_add(std::span<const double> B, std::span<const double> x, std::span<double> acc) {
  const std::size_t d = x.size();
  for (std::size_t i = 0; i < d; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += B[i * d + j] * x[j];
    acc[i] += s;
  }
}

struct LU {
  std::size_t d;
  Mat a;
  std::vector<std::size_t> piv;
  bool singular = false;

  LU(Mat m, std::size_t n, double tol) : d(n), a(std::move(m)), piv(n) {
    double scale = 0.0;
    for (double x : a) scale = std::max(scale, std::abs(x));
    for (std::size_t c = 0; c < d; ++c) {
      std::size_t p = c;
      for (std::size_t r = c + 1; r < d; ++r)
        if (std::abs(a[r * d + c]) > std::abs(a[p * d + c])) p = r;
      piv[c] = p;
      if (std::abs(a[p * d + c]) <= tol * std::max(scale, 1e-300)) {
        singular = true;
        return;
      }
      if (p != c)
        for (std::size_t j = 0; j < d; ++j) std::swap(a[p * d + j], a[c * d + j]);
      for (std::size_t r = c + 1; r < d; ++r) {
        const double f = a[r * d + c] / a[c * d + c];
        a[r * d + c] = f;
        for (std::size_t j = c + 1; j < d; ++j) a[r * d + j] -= f * a[c * d + j];
      }
    }
  }

  void solve(std::span<double> b) const {
    for (std::size_t c = 0; c < d; ++c) {
      std::swap(b[c], b[piv[c]]);
      for (std::size_t r = c + 1; r < d; ++r) b[r] -= a[r * d + c] * b[c];
    }
    for (std::size_t c = d; c-- > 0;) {
      for (std::size_t j = c + 1; j < d; ++j) b[c] -= a[c * d + j] * b[j];
      b[c] /= a[c * d + c];
    }
  }
};

void require_shape(const CausalKernel& chi, const Trajectory& x, const char* who) {
  if (x.rows() != chi.n_slices() || x.cols() != chi.dim())
    throw InputShapeError(std::string(who) + ": trajectory is " + std::to_string(x.rows()) + "x" +
                          std::to_string(x.cols()) + ", kernel expects " + std::to_string(chi.n_slices()) +
                          "x" + std::to_string(chi.dim()));
}

// d^2/dt^2 of the column t -> chi(t, t_kp) at t_k (k >= kp). Central in the
// interior, second-order one-sided at the column start and at the last
// slice. Returns true when a one-sided or reduced stencil was used.
bool chi_tt(const CausalKernel& chi, std::size_t k, std::size_t kp, std::span<double> out) {
  const std::size_t n = chi.n_slices();
  const double h2 = chi.times().dt() * chi.times().dt();
  std::fill(out.begin(), out.end(), 0.0);
  auto add = [&](std::size_t row, double w) {
    const auto B = chi.block(row, kp);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * B[i] / h2;
  };
  if (k > kp && k + 1 < n) {
    add(k - 1, 1.0), add(k, -2.0), add(k + 1, 1.0);
    return false;
  }
  if (k == kp && k + 3 < n) {
    add(k, 2.0), add(k + 1, -5.0), add(k + 2, 4.0), add(k + 3, -1.0);
  } else if (k >= kp + 3) {
    add(k, 2.0), add(k - 1, -5.0), add(k - 2, 4.0), add(k - 3, -1.0);
  } else if (k == kp && k + 2 < n) {
    add(k, 1.0), add(k + 1, -2.0), add(k + 2, 1.0);
  } else if (k >= kp + 2) {
    add(k, 1.0), add(k - 1, -2.0), add(k - 2, 1.0);
  }
  return true;
}

}  // namespace

CausalKernel::CausalKernel(TimeGrid times, std::size_t d)
    : times_(times), d_(d), data_(d * d * times.n_slices() * (times.n_slices() + 1) / 2, 0.0) {
  if (d == 0) throw InputShapeError("CausalKernel: basis dimension must be positive");
}

std::size_t CausalKernel::offset(std::size_t k, std::size_t kp) const {
  if (kp > k || k >= n_slices()) throw InputShapeError("CausalKernel: block outside the causal triangle");
  return (k * (k + 1) / 2 + kp) * d_ * d_;
}

std::span<double> CausalKernel::block(std::size_t k, std::size_t kp) {
  return {data_.data() + offset(k, kp), d_ * d_};
}

std::span<const double> CausalKernel::block(std::size_t k, std::size_t kp) const {
  return {data_.data() + offset(k, kp), d_ * d_};
}

double CausalKernel::operator()(std::size_t k, std::size_t kp, std::size_t i, std::size_t j) const {
  if (kp > k) return 0.0;
  return block(k, kp)[i * d_ + j];
}

Trajectory forward_response(const CausalKernel& chi, const Trajectory& v) {
  require_shape(chi, v, "forward_response");
  const std::size_t n = chi.n_slices(), d = chi.dim();
  const double dt = chi.times().dt();
  Trajectory dn(n, d);
  std::vector<double> acc(d);
  for (std::size_t k = 0; k < n; ++k) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t kp = 0; kp <= k; ++kp) mat_vec_add(chi.block(k, kp), v.row(kp), acc);
    for (std::size_t i = 0; i < d; ++i) dn(k, i) = dt * acc[i];
  }
  return dn;
}

std::vector<double> hartree_kernel(const RadialGrid& grid) {
  const std::size_t d = grid.size();
  std::vector<double> H(d * d, 0.0);
  const auto w = grid.weights();
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t jp = 0; jp < d; ++jp) {
      const double rp = grid.r(jp), big = std::max(grid.r(j), rp);
      if (big > 0.0) H[j * d + jp] = 4.0 * std::numbers::pi * rp * rp * w[jp] / big;
    }
  return H;
}

DysonResult solve_dyson(const CausalKernel& chi, const std::vector<double>& hartree, const ModelXCKernel& fxc,
                        const Trajectory& v_ext, DysonOptions o) {
  require_shape(chi, v_ext, "solve_dyson");
  const std::size_t n = chi.n_slices(), d = chi.dim();
  if (!hartree.empty() && hartree.size() != d * d)
    throw InputShapeError("solve_dyson: Hartree matrix does not match the basis");
  const double dt = chi.times().dt();
  const bool local = fxc.kind == ModelXCKernel::Kind::adiabatic_local;
  DysonResult out{Trajectory(n, d), Trajectory(n, d), 0};
  std::vector<double> hist(d), acc(d), dn(d), prev(d);
  for (std::size_t k = 0; k < n; ++k) {
    std::fill(hist.begin(), hist.end(), 0.0);
    for (std::size_t kp = 0; kp < k; ++kp) mat_vec_add(chi.block(k, kp), out.dV.row(kp), hist);
    auto dV = out.dV.row(k);
    std::fill(dn.begin(), dn.end(), 0.0);
    double last_change = 0.0, radius = 0.0;
    int it = 0;
    for (;; ++it) {
      for (std::size_t i = 0; i < d; ++i) dV[i] = v_ext(k, i);
      if (!hartree.empty()) mat_vec_add(hartree, dn, dV);
      if (local)
        for (std::size_t i = 0; i < d; ++i) dV[i] += fxc.strength * dn[i];
      acc = hist;
      mat_vec_add(chi.block(k, k), dV, acc);
      prev = dn;
      double change = 0.0, size = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        dn[i] = dt * acc[i];
        change = std::max(change, std::abs(dn[i] - prev[i]));
        size = std::max(size, std::abs(dn[i]));
      }
      if (it > 0 && last_change > 0.0) radius = change / last_change;
      last_change = change;
      const bool blown = !std::isfinite(change) || (it >= 20 && radius > 1.05);
      if (!blown && change <= o.tolerance * std::max(1.0, size)) break;
      if (blown || it + 1 >= o.max_iterations)
        throw DivergenceError("solve_dyson: equal-time fixed point did not converge at slice " +
                              std::to_string(k) + ", spectral radius estimate " + io::format_double(radius));
    }
    // dV consistent with the converged dn
    for (std::size_t i = 0; i < d; ++i) dV[i] = v_ext(k, i);
    if (!hartree.empty()) mat_vec_add(hartree, dn, dV);
    if (local)
      for (std::size_t i = 0; i < d; ++i) dV[i] += fxc.strength * dn[i];
    std::copy(dn.begin(), dn.end(), out.dn.row(k).begin());
    out.max_iterations_used = std::max(out.max_iterations_used, it + 1);
  }
  return out;
}

bool KernelDiagonalK::any_singular() const {
  return std::any_of(singular.begin(), singular.end(), [](bool b) { return b; });
}

KernelDiagonalK extract_K(const CausalKernel& chi, double tol) {
  const std::size_t n = chi.n_slices(), d = chi.dim();
  if (n < 2) throw InsufficientDataError("extract_K: needs at least two time slices");
  const double dt = chi.times().dt();
  KernelDiagonalK out{chi.times(), d, std::vector<std::vector<double>>(n, Mat(d * d)), std::vector<bool>(n, false),
                      std::vector<bool>(n, false)};
  for (std::size_t k = 1; k < n; ++k) {
    const auto a = chi.block(k, k), b = chi.block(k, k - 1);
    for (std::size_t i = 0; i < d * d; ++i) out.K[k][i] = (a[i] - b[i]) / dt;
    out.singular[k] = LU(out.K[k], d, tol).singular;
  }
  out.K[0] = out.K[1];
  out.copied[0] = true;
  out.singular[0] = out.singular[1];
  return out;
}

VolterraResult volterra_invert(const CausalKernel& chi, const Trajectory& dn, VolterraOptions o) {
  require_shape(chi, dn, "volterra_invert");
  const std::size_t n = chi.n_slices(), d = chi.dim(), dd = d * d;
  if (n < 4) throw InsufficientDataError("volterra_invert: needs at least four time slices");
  const auto K = extract_K(chi);
  for (std::size_t k = 0; k < n; ++k)
    if (K.singular[k])
      throw SingularKernelError("volterra_invert: K(t) is singular at slice " + std::to_string(k));
  const double dt = chi.times().dt();

  // second derivative of dn; before the switch-on there is no response, so
  // the ghost at t = -dt is zero
  auto D = d_dt(dn, chi.times(), 2);
  for (std::size_t i = 0; i < d; ++i) D.values(0, i) = (dn(1, i) - 2.0 * dn(0, i)) / (dt * dt);

  VolterraResult out{Trajectory(n, d), CausalKernel(o.resolvent ? chi.times() : TimeGrid(dt, 1), d),
                     Trajectory(n, d), std::vector<bool>(n, false), 0.0, true};
  out.flagged[0] = out.flagged[1] = out.flagged[n - 1] = true;

  std::vector<Mat> A(n, Mat(dd));  // row k of -den^-1 C, rebuilt per k
  Mat C(dd), den(dd);
  std::vector<double> rhs(d), col(d);
  for (std::size_t k = 0; k < n; ++k) {
    if (chi_tt(chi, k, k, C) && k + 3 >= n) out.flagged[k] = true;
    for (std::size_t i = 0; i < dd; ++i) den[i] = -K.K[k][i] + dt * C[i];
    const LU lu(den, d, 1e-14);
    if (lu.singular) throw SingularKernelError("volterra_invert: equal-time block singular at slice " + std::to_string(k));

    for (std::size_t i = 0; i < d; ++i) rhs[i] = D.values(k, i);
    lu.solve(rhs);
    std::copy(rhs.begin(), rhs.end(), out.source.row(k).begin());

    // A[k][k'] = -den^-1 C[k][k'], solved column by column
    for (std::size_t kp = 0; kp < k; ++kp) {
      chi_tt(chi, k, kp, C);
      for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < d; ++i) col[i] = -C[i * d + j];
        lu.solve(col);
        for (std::size_t i = 0; i < d; ++i) A[kp][i * d + j] = col[i];
      }
    }

    auto vk = out.v.row(k);
    std::copy(out.source.row(k).begin(), out.source.row(k).end(), vk.begin());
    std::fill(rhs.begin(), rhs.end(), 0.0);
    for (std::size_t kp = 0; kp < k; ++kp) mat_vec_add(A[kp], out.v.row(kp), rhs);
    for (std::size_t i = 0; i < d; ++i) vk[i] += dt * rhs[i];

    if (o.resolvent) {
      // R[k][.] = A[k][.] + dt sum_m A[k][m] R[m][.]
      for (std::size_t kp = 0; kp < k; ++kp) {
        auto r = out.R.block(k, kp);
        std::copy(A[kp].begin(), A[kp].end(), r.begin());
      }
      for (std::size_t m = 1; m < k; ++m)
        for (std::size_t kp = 0; kp < m; ++kp) {
          const auto Rm = out.R.block(m, kp);
          auto r = out.R.block(k, kp);
          for (std::size_t i = 0; i < d; ++i)
            for (std::size_t l = 0; l < d; ++l) {
              const double a = dt * A[m][i * d + l];
              for (std::size_t j = 0; j < d; ++j) r[i * d + j] += a * Rm[l * d + j];
            }
        }
    }
  }

  const auto back = forward_response(chi, out.v);
  double miss = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < dn.flat().size(); ++i) {
    miss = std::max(miss, std::abs(back.flat()[i] - dn.flat()[i]));
    scale = std::max(scale, std::abs(dn.flat()[i]));
  }
  out.misfit = scale > 0.0 ? miss / scale : miss;
  out.consistent = out.misfit <= o.consistency_tol;
  return out;
}

Trajectory apply_resolvent(const CausalKernel& R, const Trajectory& g) {
  require_shape(R, g, "apply_resolvent");
  const std::size_t n = R.n_slices(), d = R.dim();
  const double dt = R.times().dt();
  Trajectory v(n, d);
  std::vector<double> acc(d);
  for (std::size_t k = 0; k < n; ++k) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t kp = 0; kp < k; ++kp) mat_vec_add(R.block(k, kp), g.row(kp), acc);
    for (std::size_t i = 0; i < d; ++i) v(k, i) = g(k, i) + dt * acc[i];
  }
  return v;
}

ChiColumn numerical_chi_s(const ChiScenario& sc, const Perturbation& p) {
  if (sc.omega <= 0.0) throw ModelInvalidError("numerical_chi_s: omega must be positive");
  if (sc.basis_stride == 0) throw InputShapeError("numerical_chi_s: basis stride must be positive");
  const RadialGrid grid(sc.r_max, sc.n_points);
  const TimeGrid times(sc.t_final, sc.n_steps);
  std::vector<std::size_t> basis;
  for (std::size_t j = 0; j < grid.size(); j += sc.basis_stride) basis.push_back(j);
  if (p.site >= basis.size() || p.slice >= times.n_slices())
    throw InputShapeError("numerical_chi_s: perturbation outside the basis or time grid");
  if (!(p.epsilon > 0.0)) throw StepSizeError("numerical_chi_s: epsilon must be positive");

  const double w2 = sc.omega * sc.omega;
  std::vector<double> v0(grid.size());
  for (std::size_t j = 0; j < v0.size(); ++j) v0[j] = 0.5 * w2 * grid.r(j) * grid.r(j);
  const auto gs = solve_ground_state(v0, 1.0, grid);

  const double dt = times.dt(), rc = grid.r(basis[p.site]), wb = sc.bump_width;
  const double t_mid = times.t(p.slice) + 0.5 * dt;
  auto run = [&](double eps) {
    const double amp = eps / dt;
    PotentialFn V = [=](double t, std::span<const double> s, std::span<double> v) {
      const bool on = std::abs(t - t_mid) < 0.25 * dt;
      for (std::size_t i = 0; i < s.size(); ++i) {
        v[i] = 0.5 * w2 * s[i] * s[i];
        if (on) v[i] += amp * std::exp(-(s[i] - rc) * (s[i] - rc) / (2.0 * wb * wb));
      }
    };
    return propagate(gs.wavefunction, V, times);
  };
  const double e = p.epsilon;
  const std::vector<double> amps{e, -e, 0.5 * e, -0.5 * e};
  std::vector<WavefunctionTrajectory> runs(4, WavefunctionTrajectory{grid, times, 1.0, {}});
  parallel_for(4, sc.jobs, [&](std::size_t i) { runs[i] = run(amps[i]); });

  ChiColumn out{times, {}, Trajectory(times.n_slices(), basis.size()), 0.0};
  for (std::size_t j : basis) out.basis_r.push_back(grid.r(j));
  double diff = 0.0, size = 0.0;
  for (std::size_t k = 0; k < times.n_slices(); ++k) {
    const auto np = runs[0].at(k).density(), nm = runs[1].at(k).density();
    const auto hp = runs[2].at(k).density(), hm = runs[3].at(k).density();
    for (std::size_t b = 0; b < basis.size(); ++b) {
      const std::size_t j = basis[b];
      const double full = 2.0 * (np[j] - nm[j]) / (2.0 * e);
      const double half = 2.0 * (hp[j] - hm[j]) / e;
      out.column(k, b) = full;
      diff = std::max(diff, std::abs(full - half));
      size = std::max(size, std::abs(full));
    }
  }
  out.linearity = size > 0.0 ? diff / size : 0.0;
  if (out.linearity > 0.1)
    throw StepSizeError("numerical_chi_s: column changes by " + io::format_double(out.linearity) +
                        " between eps and eps/2");
  return out;
}

void write_kernel(const std::filesystem::path& csv, const CausalKernel& chi) {
  nlohmann::json meta;
  meta["d"] = chi.dim();
  meta["n_steps"] = chi.times().n_steps();
  meta["t_final"] = chi.times().t_final();
  meta["dt"] = chi.times().dt();
  meta["layout"] = "lower-triangular k' <= k, row-major (k, k', i, j)";
  io::write_json(io::sidecar_path(csv), meta);
  std::ofstream out(csv);
  if (!out) throw InputError("cannot write " + csv.string());
  out << "k,kp,i,j,value\n";
  const std::size_t d = chi.dim();
  for (std::size_t k = 0; k < chi.n_slices(); ++k)
    for (std::size_t kp = 0; kp <= k; ++kp) {
      const auto b = chi.block(k, kp);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
          out << k << ',' << kp << ',' << i << ',' << j << ',' << io::format_double(b[i * d + j]) << '\n';
    }
}

CausalKernel read_kernel(const std::filesystem::path& csv) {
  const auto meta = io::read_json(io::sidecar_path(csv));
  CausalKernel chi(TimeGrid(meta.at("t_final").get<double>(), meta.at("n_steps").get<std::size_t>()),
                   meta.at("d").get<std::size_t>());
  std::ifstream in(csv);
  if (!in) throw InputShapeError("cannot open " + csv.string());
  std::string line;
  std::getline(in, line);
  if (line != "k,kp,i,j,value") throw InputShapeError("read_kernel: unexpected header '" + line + "'");
  const std::size_t d = chi.dim();
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = io::split_csv_line(line);
    if (c.size() != 5) throw InputShapeError("read_kernel: malformed row");
    const auto k = std::stoul(c[0]), kp = std::stoul(c[1]), i = std::stoul(c[2]), j = std::stoul(c[3]);
    if (kp > k || k >= chi.n_slices() || i >= d || j >= d)
      throw InputShapeError("read_kernel: entry outside the causal triangle");
    chi.block(k, kp)[i * d + j] = io::parse_double(c[4]);
    ++count;
  }
  if (count != chi.stored()) throw InputShapeError("read_kernel: entry count does not match the header");
  return chi;
}

}  // namespace hhm
