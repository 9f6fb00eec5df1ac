#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "hhm/cm/ermakov.hpp"
#include "hhm/core/io.hpp"
#include "hhm/rm/radial.hpp"

namespace hhmlab {
namespace fs = std::filesystem;
using hhm::io::format_double;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

class Manifest {
 public:
  Manifest(const Scenario& s, std::string sub, fs::path out) : s_(s), sub_(std::move(sub)), out_(std::move(out)) {}

  void check(const std::string& name, double value, const std::string& tol_name, bool below = true) {
    const double tol = s_.tolerance(tol_name);
    const bool pass = std::isfinite(value) && (below ? value <= tol : value > tol);
    checks_.push_back({{"name", name}, {"value", value}, {"tolerance", tol_name}, {"threshold", tol},
                       {"relation", below ? "<=" : ">"}, {"pass", pass}});
    ok_ = ok_ && pass;
    std::cout << (pass ? "PASS " : "FAIL ") << name << " = " << format_double(value) << (below ? " <= " : " > ")
              << format_double(tol) << '\n';
  }
  void value(const std::string& name, json v) { values_[name] = std::move(v); }
  void warn(const std::string& w) {
    warnings_.push_back(w);
    std::cerr << "warning: " << w << '\n';
  }
  fs::path file(const std::string& name) {
    files_.push_back(name);
    return out_ / name;
  }
  bool ok() const { return ok_; }

  void write() const {
    json m;
    m["tool"] = "hhmlab";
    m["version"] = kVersion;
    m["subcommand"] = sub_;
    m["scenario"] = s_.name;
    m["config"] = fs::path(s_.source).filename().string();
    m["config_sha256"] = sha256_file(s_.source);
    m["jobs"] = s_.jobs;
    m["stride"] = s_.stride;
    m["tolerances"] = s_.tol;
    m["checks"] = checks_;
    m["values"] = values_;
    m["warnings"] = warnings_;
    json files = json::array();
    // sidecars are emitted next to their CSV files
    std::vector<std::string> all = files_;
    for (const auto& f : files_) {
      const auto side = hhm::io::sidecar_path(out_ / f);
      if (fs::exists(side)) all.push_back(side.filename().string());
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    for (const auto& f : all)
      files.push_back({{"path", f}, {"sha256", sha256_file(out_ / f)}, {"bytes", fs::file_size(out_ / f)}});
    m["files"] = files;
    m["status"] = ok_ ? "pass" : "fail";
    hhm::io::write_json(out_ / "manifest.json", m);
  }

 private:
  const Scenario& s_;
  std::string sub_;
  fs::path out_;
  json checks_ = json::array();
  json values_ = json::object();
  std::vector<std::string> warnings_;
  std::vector<std::string> files_;
  bool ok_ = true;
};

std::ofstream open_csv(const fs::path& p, const std::string& header) {
  std::ofstream out(p);
  if (!out) throw hhm::InputError("cannot write " + p.string());
  out << header << '\n';
  return out;
}

// lazily built stages shared by the subcommands
class Pipeline {
 public:
  explicit Pipeline(const Scenario& s) : s_(s) {}

  const hhm::GroundState& ground_state() {
    if (!gs_) gs_ = hhm::solve_ground_state(s_.u, s_.w.omega0, 0.5, s_.rm_grid());
    return *gs_;
  }
  const hhm::WavefunctionTrajectory& rm() {
    if (!rm_) rm_ = hhm::propagate(ground_state().wavefunction, s_.u, s_.w, s_.times(), {.stride = s_.stride});
    return *rm_;
  }
  const hhm::WidthTrajectory& width() {
    if (!width_) width_ = hhm::solve_ermakov(s_.w, 2.0, s_.times());
    return *width_;
  }
  const hhm::DensityTrajectory& density() {
    if (!n_) n_ = hhm::assemble_density(width(), rm(), s_.grid(), s_.quad);
    return *n_;
  }
  const hhm::VelocityField& velocity() {
    if (!v_) {
      hhm::InversionOptions o;
      o.jobs = s_.jobs;
      v_ = hhm::velocity_field(density(), o);
    }
    return *v_;
  }
  const hhm::KSOrbital& orbital() {
    if (!orb_) orb_ = hhm::build_orbital(density(), velocity());
    return *orb_;
  }
  const hhm::PotentialTrajectory& potential() {
    if (!V_) {
      hhm::InversionOptions o;
      o.jobs = s_.jobs;
      V_ = hhm::invert_potential(orbital(), o);
    }
    return *V_;
  }

 private:
  const Scenario& s_;
  std::optional<hhm::GroundState> gs_;
  std::optional<hhm::WavefunctionTrajectory> rm_;
  std::optional<hhm::WidthTrajectory> width_;
  std::optional<hhm::DensityTrajectory> n_;
  std::optional<hhm::VelocityField> v_;
  std::optional<hhm::KSOrbital> orb_;
  std::optional<hhm::PotentialTrajectory> V_;
};

bool harmonic_pair(const hhm::InteractionSpec& u) {
  return u.kind == hhm::InteractionSpec::Kind::moshinsky || u.kind == hhm::InteractionSpec::Kind::none;
}

void write_density(Manifest& m, const hhm::DensityTrajectory& n, const std::string& name) {
  hhm::io::write_trajectory(m.file(name), n.grid, n.times, n.values);
}

void ground_state(const Scenario& s, Pipeline& p, Manifest& m) {
  const auto& gs = p.ground_state();
  const auto& wf = gs.wavefunction;
  const auto dens = wf.density();
  auto out = open_csv(m.file("ground_state.csv"), "s,chi,psi_sq");
  for (std::size_t j = 0; j < wf.grid.size(); ++j)
    out << format_double(wf.grid.r(j)) << ',' << format_double(wf.chi[j].real()) << ',' << format_double(dens[j])
        << '\n';
  out.close();
  m.value("E_RM", gs.energy);
  m.value("iterations", gs.iterations);
  if (harmonic_pair(s.u)) {
    const double shift = s.u.kind == hhm::InteractionSpec::Kind::moshinsky ? 2.0 * s.u.force_constant : 0.0;
    const double exact = 1.5 * std::sqrt(s.w.omega0 * s.w.omega0 - shift);
    m.value("E_RM_exact", exact);
    m.check("ground_state_energy_error", std::abs(gs.energy - exact), "energy");
  }
  m.check("norm_error", std::abs(wf.norm() - 1.0), "norm");
}

void evolve(const Scenario&, Pipeline& p, Manifest& m) {
  const auto& rm = p.rm();
  hhm::Field rho(rm.times.n_slices(), rm.grid.size());
  double drift = 0.0;
  for (std::size_t k = 0; k < rm.times.n_slices(); ++k) {
    const auto wf = rm.at(k);
    const auto d = wf.density();
    std::copy(d.begin(), d.end(), rho.row(k).begin());
    drift = std::max(drift, std::abs(wf.norm() - 1.0));
  }
  hhm::io::write_trajectory(m.file("rm_density.csv"), rm.grid, rm.times, rho, {{"quantity", "|psi_rm|^2"}});
  hhm::write_width(m.file("width.csv"), p.width());
  m.check("rm_norm_drift", drift, "norm");
}

void density(const Scenario&, Pipeline& p, Manifest& m) {
  const auto& n = p.density();
  write_density(m, n, "density.csv");
  double worst = 0.0, lowest = 0.0;
  for (std::size_t k = 0; k < n.times.n_slices(); ++k) {
    worst = std::max(worst, std::abs(hhm::integrate_radial(n.values.row(k), n.grid) - 2.0));
    for (double x : n.values.row(k)) lowest = std::min(lowest, x);
  }
  m.check("normalization_error", worst, "norm");
  m.check("negative_density", 0.0 - lowest, "positivity");
  m.value("tail_ratio", hhm::tail_ratio(n));
}

void scattering(const Scenario& s, Pipeline& p, Manifest& m) {
  const auto f = hhm::scattering_factor(p.density(), s.k_max, s.n_k);
  hhm::write_scattering(m.file("scattering.csv"), f);
  double worst = 0.0;
  for (std::size_t k = 0; k < f.times.n_slices(); ++k) worst = std::max(worst, std::abs(f(k, 0) - 2.0));
  m.check("f0_minus_2", worst, "norm");
}

void verify_moshinsky(const Scenario& s, Pipeline& p, Manifest& m) {
  const double K = s.u.kind == hhm::InteractionSpec::Kind::moshinsky ? s.u.force_constant : 0.0;
  const auto f = hhm::scattering_factor(p.density(), s.k_max, s.n_k);
  const auto g = hhm::moshinsky_scattering_closed_form(s.w, K, s.k_max, s.n_k, f.times);
  hhm::write_scattering(m.file("scattering.csv"), f);
  hhm::write_scattering(m.file("scattering_closed_form.csv"), g);
  auto out = open_csv(m.file("deviation.csv"), "t,max_half_abs_diff");
  double worst = 0.0;
  for (std::size_t k = 0; k < f.times.n_slices(); ++k) {
    double row = 0.0;
    for (std::size_t q = 0; q < f.n_k; ++q) row = std::max(row, 0.5 * std::abs(f(k, q) - g(k, q)));
    out << format_double(f.times.t(k)) << ',' << format_double(row) << '\n';
    worst = std::max(worst, row);
  }
  m.check("max_half_f_deviation", worst, "moshinsky");
}

void invert_ks(const Scenario&, Pipeline& p, Manifest& m) {
  write_density(m, p.density(), "density.csv");
  const auto& V = p.potential();
  hhm::write_potential(m.file("potential.csv"), V);
  std::size_t flagged = 0;
  for (bool b : V.one_sided) flagged += b;
  m.value("one_sided_slices", flagged);
}

void roundtrip(const Scenario& s, Pipeline& p, Manifest& m) {
  const auto& V = p.potential();
  hhm::write_potential(m.file("potential.csv"), V);
  const auto rep = hhm::repropagate_check(V, p.density(), s.roundtrip);
  auto out = open_csv(m.file("roundtrip.csv"), "t,mismatch");
  for (std::size_t k = 0; k < rep.mismatch.size(); ++k)
    out << format_double(V.times.t(k)) << ',' << format_double(rep.mismatch[k]) << '\n';
  m.value("t_worst", rep.t_worst);
  m.check("max_density_mismatch", rep.max_mismatch, "roundtrip");
}

void residual_outputs(Manifest& m, const hhm::ResidualField& r, const std::string& stem) {
  hhm::write_residual_report(m.file(stem + ".json"), r);
  hhm::io::write_trajectory(m.file(stem + "_field.csv"), r.grid, r.times, r.residual, {{"identity", r.identity}});
}

void check_continuity(const Scenario& s, Pipeline& p, Manifest& m) {
  const auto r = hhm::continuity_residual(p.density(), p.velocity(), s.residual);
  residual_outputs(m, r, "continuity");
  m.check("continuity_max_l2", r.max_l2(), "continuity");
}

void check_dvt(const Scenario& s, Pipeline& p, Manifest& m) {
  const auto z = hhm::kinetic_vector_field(p.orbital(), s.residual);
  const auto r = hhm::dvt_residual_ks(p.density(), z, p.potential(), s.residual);
  residual_outputs(m, r, "dvt");
  m.check("dvt_max_l2", r.max_l2(), "dvt");
}

void check_dvt_interacting(const Scenario& s, Pipeline& p, Manifest& m) {
  const auto& n = p.density();
  auto quad = s.pair;
  // a few stencil widths past the evaluation radius is all the residual reads
  quad.r_cut = std::min(quad.r_cut, s.residual.r_eval + 8.0 * n.grid.spacing());
  const auto terms = hhm::interacting_terms(p.width(), p.rm(), s.u, n.grid, quad);
  const auto& F = terms.force;
  const auto V = hhm::external_potential(s.w, n.grid, n.times);
  const auto r = hhm::dvt_residual_interacting(n, terms.z, F, V, s.residual);
  residual_outputs(m, r, "dvt_interacting");
  hhm::io::write_trajectory(m.file("pair_force.csv"), F.grid, F.times, F.force, {{"quantity", "F_r"}});
  m.check("dvt_interacting_max_linf", r.max_linf(), "dvt_interacting");
}

void check_hpt(const Scenario& s, Pipeline&, Manifest& m) {
  const auto& h = s.hpt;
  const auto rep = hhm::hpt_check(h.omega0, h.E0, h.Omega, hhm::TimeGrid(h.t_final, h.n_steps), h.options);
  auto out = open_csv(m.file("hpt.csv"), "t,x_cl,deviation");
  for (std::size_t k = 0; k < rep.times.size(); ++k)
    out << format_double(rep.times[k]) << ',' << format_double(rep.x_cl[k]) << ',' << format_double(rep.deviation[k])
        << '\n';
  for (const auto& w : rep.warnings) m.warn(w);
  m.check("hpt_max_deviation", rep.max_deviation, "hpt");
  if (h.control_anharmonic != 0.0) {
    auto o = h.options;
    o.anharmonic = h.control_anharmonic;
    const auto steps = static_cast<std::size_t>(
        std::lround(h.control_t_final / h.t_final * static_cast<double>(h.n_steps) / o.stride)) * o.stride;
    const auto ctl = hhm::hpt_check(h.omega0, h.E0, h.Omega, hhm::TimeGrid(h.control_t_final, steps), o);
    m.check("anharmonic_control_deviation", ctl.max_deviation, "hpt_control", false);
  }
}

void extract_chi(const Scenario& s, Pipeline&, Manifest& m) {
  auto out = open_csv(m.file("chi_columns.csv"), "site,slice,t,r,chi");
  double before = 0.0, linear = 0.0;
  for (const auto& q : s.perturbations) {
    const auto col = hhm::numerical_chi_s(s.chi, q);
    for (std::size_t k = 0; k < col.times.n_slices(); ++k)
      for (std::size_t b = 0; b < col.basis_r.size(); ++b) {
        out << q.site << ',' << q.slice << ',' << format_double(col.times.t(k)) << ','
            << format_double(col.basis_r[b]) << ',' << format_double(col.column(k, b)) << '\n';
        if (k <= q.slice) before = std::max(before, std::abs(col.column(k, b)));
      }
    linear = std::max(linear, col.linearity);
  }
  m.check("response_before_kick", before, "chi_causal");
  m.check("epsilon_linearity", linear, "chi_linearity");
}

void causality_roundtrip(const Scenario& s, Pipeline&, Manifest& m) {
  const auto& c = s.causality;
  const hhm::TimeGrid t(c.t_final, c.n_steps);
  hhm::CausalKernel chi(t, 1);
  for (std::size_t k = 0; k < t.n_slices(); ++k)
    for (std::size_t kp = 0; kp <= k; ++kp) chi.block(k, kp)[0] = std::sin(c.omega * (t.t(k) - t.t(kp))) / c.omega;
  hhm::Trajectory v(t.n_slices(), 1);
  for (std::size_t k = 0; k < t.n_slices(); ++k) v(k, 0) = std::sin(2.0 * t.t(k)) + 0.5 * t.t(k) * t.t(k) + 0.3;
  const auto dn = hhm::forward_response(chi, v);
  const auto inv = hhm::volterra_invert(chi, dn);
  const auto via_R = hhm::apply_resolvent(inv.R, inv.source);
  auto out = open_csv(m.file("causality.csv"), "t,v_true,dn,v_recovered,v_resolvent,flagged");
  double err = 0.0, path = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < t.n_slices(); ++k) {
    out << format_double(t.t(k)) << ',' << format_double(v(k, 0)) << ',' << format_double(dn(k, 0)) << ','
        << format_double(inv.v(k, 0)) << ',' << format_double(via_R(k, 0)) << ',' << (inv.flagged[k] ? 1 : 0)
        << '\n';
    err = std::max(err, std::abs(inv.v(k, 0) - v(k, 0)));
    path = std::max(path, std::abs(via_R(k, 0) - inv.v(k, 0)));
    scale = std::max(scale, std::abs(v(k, 0)));
  }
  if (c.write_kernel) {
    hhm::write_kernel(m.file("kernel.csv"), chi);
    hhm::write_kernel(m.file("resolvent.csv"), inv.R);
  }
  // the resolvent has storage for k' <= k only; its diagonal is never written
  double diag = 0.0;
  for (std::size_t k = 0; k < t.n_slices(); ++k) diag = std::max(diag, std::abs(inv.R.block(k, k)[0]));
  const bool lower_only = inv.R.stored() == t.n_slices() * (t.n_slices() + 1) / 2;
  m.value("resolvent_lower_triangular_storage", lower_only);
  m.value("misfit", inv.misfit);
  m.check("drive_recovery_error", err / scale, "causality");
  m.check("resolvent_path_difference", path / scale, "causality");
  m.check("resolvent_diagonal", lower_only ? diag : 1.0, "chi_causal");
}

using Fn = void (*)(const Scenario&, Pipeline&, Manifest&);

const std::vector<std::pair<std::string, Fn>>& table() {
  static const std::vector<std::pair<std::string, Fn>> t{
      {"ground-state", ground_state},
      {"evolve", evolve},
      {"density", density},
      {"scattering", scattering},
      {"verify-moshinsky", verify_moshinsky},
      {"invert-ks", invert_ks},
      {"roundtrip", roundtrip},
      {"check-continuity", check_continuity},
      {"check-dvt", check_dvt},
      {"check-dvt-interacting", check_dvt_interacting},
      {"check-hpt", check_hpt},
      {"extract-chi", extract_chi},
      {"causality-roundtrip", causality_roundtrip},
  };
  return t;
}

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw hhm::InputError("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [n, f] : table()) v.push_back(n);
    return v;
  }();
  return names;
}

int run_command(const std::string& sub, const Scenario& s, const fs::path& out) {
  const auto it = std::find_if(table().begin(), table().end(), [&](const auto& e) { return e.first == sub; });
  if (it == table().end()) throw ConfigError("unknown subcommand " + sub);
  fs::create_directories(out);
  Manifest m(s, sub, out);
  for (const auto& w : s.warnings) m.warn(w);
  Pipeline p(s);
  it->second(s, p, m);
  m.write();
  return m.ok() ? 0 : 1;
}

int hhmlab_main(int argc, const char* const* argv) {
  CLI::App app{"hhmlab: two-electron harmonic-confinement scenarios and their consistency checks"};
  app.require_subcommand(1, 1);
  std::string config, out = "out";
  unsigned jobs = 1;
  std::size_t stride = 0;
  std::vector<std::string> tols;
  for (const auto& name : subcommands()) {
    auto* sc = app.add_subcommand(name);
    sc->add_option("--config", config, "scenario JSON")->required();
    sc->add_option("--out", out, "output directory");
    sc->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sc->add_option("--tol", tols, "tolerance override <name>=<value>");
    sc->add_option("--stride", stride, "snapshot thinning")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    Scenario s = load_scenario(config, tols, sub);
    if (stride != 0) {
      if (s.n_steps % stride != 0) throw ConfigError("--stride " + std::to_string(stride) + " must divide time.n_steps");
      s.stride = stride;
    }
    s.jobs = jobs;
    s.quad.jobs = s.residual.jobs = s.pair.jobs = s.chi.jobs = jobs;
    return run_command(sub, s, out);
  } catch (const hhm::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const hhm::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace hhmlab
