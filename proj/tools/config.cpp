#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hhm/core/io.hpp"

namespace hhmlab {
namespace {

using nlohmann::json;

// line of the key path inside the raw text (1 when not found)
std::size_t line_of(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  for (const auto& key : path) {
    const auto p = text.find("\"" + key + "\"", pos);
    if (p == std::string::npos) break;
    pos = p;
  }
  return static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n')) + 1;
}

class Reader {
 public:
  Reader(std::string source, std::string text, json root)
      : source_(std::move(source)), text_(std::move(text)), root_(std::move(root)) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& msg) const {
    std::string dotted;
    for (const auto& p : path) dotted += (dotted.empty() ? "" : ".") + p;
    throw ConfigError(source_ + ":" + std::to_string(line_of(text_, path)) + ": " + dotted + ": " + msg);
  }

  const json* find(const std::vector<std::string>& path) const {
    const json* j = &root_;
    for (const auto& key : path) {
      if (!j->is_object() || !j->contains(key)) return nullptr;
      j = &(*j)[key];
    }
    return j;
  }

  double number(const std::vector<std::string>& path, double fallback) const {
    const json* j = find(path);
    if (!j) return fallback;
    if (!j->is_number()) fail(path, "expected a number");
    const double v = j->get<double>();
    if (!std::isfinite(v)) fail(path, "must be finite");
    return v;
  }

  double positive(const std::vector<std::string>& path, double fallback) const {
    const double v = number(path, fallback);
    if (!(v > 0.0)) fail(path, "must be positive, got " + hhm::io::format_double(v));
    return v;
  }

  std::size_t count(const std::vector<std::string>& path, std::size_t fallback, std::size_t min = 1) const {
    const json* j = find(path);
    if (!j) return fallback;
    if (!j->is_number_integer() || j->get<long long>() < static_cast<long long>(min))
      fail(path, "expected an integer >= " + std::to_string(min));
    return j->get<std::size_t>();
  }

  std::string text(const std::vector<std::string>& path, const std::string& fallback) const {
    const json* j = find(path);
    if (!j) return fallback;
    if (!j->is_string()) fail(path, "expected a string");
    return j->get<std::string>();
  }

  bool flag(const std::vector<std::string>& path, bool fallback) const {
    const json* j = find(path);
    if (!j) return fallback;
    if (!j->is_boolean()) fail(path, "expected true or false");
    return j->get<bool>();
  }

  const json& root() const { return root_; }

 private:
  std::string source_, text_;
  json root_;
};

hhm::InteractionSpec read_interaction(const Reader& r) {
  const auto kind = r.text({"interaction", "kind"}, "none");
  if (kind == "none") return hhm::InteractionSpec::none();
  if (kind == "moshinsky") {
    const double K = r.number({"interaction", "K"}, 0.0);
    if (K < 0.0) r.fail({"interaction", "K"}, "must be >= 0");
    return hhm::InteractionSpec::moshinsky(K);
  }
  if (kind == "softened_coulomb")
    return hhm::InteractionSpec::softened_coulomb(r.number({"interaction", "lambda"}, 1.0),
                                                  r.positive({"interaction", "a"}, 1.0));
  if (kind == "inverse_square") {
    const double g = r.number({"interaction", "g"}, 0.0);
    if (g < 0.0) r.fail({"interaction", "g"}, "must be >= 0");
    return hhm::InteractionSpec::inverse_square(g);
  }
  r.fail({"interaction", "kind"}, "unknown interaction '" + kind + "'");
}

hhm::FrequencyProtocol read_frequency(const Reader& r) {
  const auto kind = r.text({"frequency", "kind"}, "constant");
  const double w0 = r.positive({"frequency", "omega0"}, 1.0);
  if (kind == "constant") return hhm::FrequencyProtocol::constant(w0);
  if (kind == "sudden_switch") {
    const double t = r.number({"frequency", "t_switch"}, 0.0);
    if (t < 0.0) r.fail({"frequency", "t_switch"}, "must be >= 0");
    return hhm::FrequencyProtocol::sudden_switch(w0, r.positive({"frequency", "omega1"}, w0), t);
  }
  if (kind == "linear_ramp")
    return hhm::FrequencyProtocol::linear_ramp(w0, r.positive({"frequency", "omega1"}, w0),
                                               r.positive({"frequency", "t_ramp"}, 1.0));
  if (kind == "sinusoidal") {
    const double amp = r.number({"frequency", "amplitude"}, 0.0);
    if (std::abs(amp) >= w0) r.fail({"frequency", "amplitude"}, "must stay below omega0 in magnitude");
    return hhm::FrequencyProtocol::sinusoidal(w0, amp, r.number({"frequency", "drive"}, 1.0));
  }
  r.fail({"frequency", "kind"}, "unknown protocol '" + kind + "'");
}

}  // namespace

const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> t{
      {"energy", 1e-6},          // ground-state energy vs 1.5 omega~ (harmonic pair forces)
      {"norm", 1e-6},            // norm drift and density normalization
      {"positivity", 1e-12},     // min n >= -positivity
      {"moshinsky", 1e-3},       // max |f_num - f_closed| / 2
      {"roundtrip", 1e-3},       // relative L2 density mismatch after repropagation
      {"continuity", 1e-3},      // max L2 continuity residual
      {"dvt", 1e-2},             // max L2 KS identity residual
      {"dvt_interacting", 1e-3},  // max Linf interacting residual
      {"hpt", 1e-4},             // rigid-translation deviation
      {"hpt_control", 1e-2},     // the anharmonic control must exceed this
      {"causality", 1e-4},       // relative drive-recovery error
      {"chi_causal", 1e-10},     // response before the kick
      {"chi_linearity", 1e-2},   // eps vs eps/2 column change
  };
  return t;
}

Scenario load_scenario(const std::filesystem::path& path, const std::vector<std::string>& overrides,
                       const std::string& sub) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ":1: cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n') + 1;
    throw ConfigError(path.string() + ":" + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
  }
  if (!root.is_object()) throw ConfigError(path.string() + ":1: top level must be an object");
  const Reader r(path.string(), text, root);

  Scenario s;
  s.source = path.string();
  s.name = r.text({"name"}, path.stem().string());
  s.u = read_interaction(r);
  s.w = read_frequency(r);
  s.r_max = r.positive({"grid", "r_max"}, s.r_max);
  s.n_points = r.count({"grid", "n_points"}, s.n_points, 5);
  s.s_max = r.positive({"rm_grid", "s_max"}, s.r_max);
  s.s_points = r.count({"rm_grid", "n_points"}, s.n_points, 5);
  s.t_final = r.positive({"time", "t_final"}, s.t_final);
  s.n_steps = r.count({"time", "n_steps"}, s.n_steps, 3);
  s.stride = r.count({"time", "stride"}, s.stride);
  s.k_max = r.positive({"scattering", "k_max"}, s.k_max);
  s.n_k = r.count({"scattering", "n_k"}, s.n_k, 2);

  s.quad.rel_tol = r.positive({"quadrature", "rel_tol"}, s.quad.rel_tol);
  s.quad.fail_tol = r.positive({"quadrature", "fail_tol"}, s.quad.fail_tol);
  s.quad.check_every = r.count({"quadrature", "check_every"}, s.quad.check_every);
  s.roundtrip.substeps = r.count({"roundtrip", "substeps"}, s.roundtrip.substeps);
  s.residual.r_eval = r.positive({"residual", "r_eval"}, 4.0);
  s.residual.floor = r.positive({"residual", "floor"}, s.residual.floor);
  s.pair.panels = static_cast<int>(r.count({"residual", "mu_panels"}, 4));
  s.pair.order = static_cast<int>(r.count({"residual", "mu_order"}, 16, 2));

  auto& h = s.hpt;
  h.omega0 = r.positive({"hpt", "omega0"}, h.omega0);
  h.E0 = r.number({"hpt", "E0"}, h.E0);
  h.Omega = r.number({"hpt", "Omega"}, h.Omega);
  h.t_final = r.positive({"hpt", "t_final"}, h.t_final);
  h.n_steps = r.count({"hpt", "n_steps"}, h.n_steps);
  h.options.x_max = r.positive({"hpt", "x_max"}, h.options.x_max);
  h.options.n_points = r.count({"hpt", "n_points"}, h.options.n_points, 5);
  h.options.stride = r.count({"hpt", "stride"}, h.options.stride);
  h.control_anharmonic = r.number({"hpt", "control_anharmonic"}, h.control_anharmonic);
  h.control_t_final = r.positive({"hpt", "control_t_final"}, h.control_t_final);
  if (h.n_steps % h.options.stride != 0) r.fail({"hpt", "stride"}, "must divide hpt.n_steps");

  auto& c = s.chi;
  c.omega = r.positive({"response", "omega"}, c.omega);
  c.r_max = r.positive({"response", "r_max"}, c.r_max);
  c.n_points = r.count({"response", "n_points"}, c.n_points, 5);
  c.t_final = r.positive({"response", "t_final"}, c.t_final);
  c.n_steps = r.count({"response", "n_steps"}, c.n_steps, 3);
  c.basis_stride = r.count({"response", "basis_stride"}, c.basis_stride);
  c.bump_width = r.positive({"response", "bump_width"}, c.bump_width);
  if (const auto* p = r.find({"response", "perturbations"})) {
    if (!p->is_array() || p->empty()) r.fail({"response", "perturbations"}, "expected a non-empty array");
    s.perturbations.clear();
    for (const auto& e : *p) {
      if (!e.is_object()) r.fail({"response", "perturbations"}, "entries must be objects");
      hhm::Perturbation q;
      q.site = e.value("site", std::size_t{0});
      q.slice = e.value("slice", std::size_t{0});
      q.epsilon = e.value("epsilon", 1e-4);
      const std::size_t sites = (c.n_points + c.basis_stride - 1) / c.basis_stride;
      if (q.site >= sites || q.slice > c.n_steps || !(q.epsilon > 0.0))
        r.fail({"response", "perturbations"}, "site, slice or epsilon out of range");
      s.perturbations.push_back(q);
    }
  }
  s.causality.omega = r.positive({"causality", "omega"}, s.causality.omega);
  s.causality.t_final = r.positive({"causality", "t_final"}, s.causality.t_final);
  s.causality.n_steps = r.count({"causality", "n_steps"}, s.causality.n_steps, 4);
  s.causality.write_kernel = r.flag({"causality", "write_kernel"}, false);

  // tolerances: defaults, then config, then flags
  s.tol = default_tolerances();
  if (const auto* t = r.find({"tolerances"})) {
    if (!t->is_object()) r.fail({"tolerances"}, "expected an object");
    for (const auto& [name, v] : t->items()) {
      if (!s.tol.count(name)) r.fail({"tolerances", name}, "unknown tolerance");
      if (!v.is_number() || !(v.get<double>() > 0.0)) r.fail({"tolerances", name}, "must be a positive number");
      s.tol[name] = v.get<double>();
    }
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    const std::string name = o.substr(0, eq);
    if (eq == std::string::npos || !s.tol.count(name))
      throw ConfigError("--tol " + o + ": expected <name>=<value> with a known tolerance name");
    double v = 0.0;
    try {
      v = hhm::io::parse_double(o.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("--tol " + o + ": value is not a number");
    }
    if (!(v > 0.0)) throw ConfigError("--tol " + o + ": must be positive");
    s.tol[name] = v;
  }

  // cross-field checks
  if (s.n_steps % s.stride != 0) r.fail({"time", "stride"}, "must divide time.n_steps");
  const double mu = 0.5;
  try {
    hhm::require_bound_relative_motion(s.u, s.w, mu, s.t_final);
  } catch (const hhm::ModelInvalidError& e) {
    r.fail({"interaction"}, e.what());
  }
  const double shift = s.u.kind == hhm::InteractionSpec::Kind::moshinsky ? s.u.force_constant / mu : 0.0;
  const double w_min = s.w.min_omega(s.t_final);
  const double w_rel = std::sqrt(std::max(w_min * w_min - shift, 1e-300));
  // relative-motion Gaussian width at the softest confinement
  const double width = 1.0 / std::sqrt(mu * w_rel);
  if (s.s_max < 6.0 * width)
    r.fail({"rm_grid"}, "s_max = " + hhm::io::format_double(s.s_max) + " is under six relative-motion widths (" +
                           hhm::io::format_double(6.0 * width) + "); the wavefunction tail would hit the wall");
  // density width b^2 = a_cm^2 + a_rm^2 / 4
  const double b = std::sqrt(1.0 / (2.0 * w_min) + 0.25 * width * width);
  if (s.r_max < 6.0 * b)
    r.fail({"grid", "r_max"}, "r_max = " + hhm::io::format_double(s.r_max) + " is under six density widths (" +
                                  hhm::io::format_double(6.0 * b) + ")");
  const double ds = s.s_max / static_cast<double>(s.s_points - 1);
  const double dt = s.t_final / static_cast<double>(s.n_steps);
  const bool propagates = sub != "check-hpt" && sub != "extract-chi" && sub != "causality-roundtrip";
  if (propagates && dt > ds * ds * mu)
    s.warnings.push_back("dt = " + hhm::io::format_double(dt) + " exceeds the explicit-scheme heuristic h^2 mu = " +
                         hhm::io::format_double(ds * ds * mu) + "; Crank-Nicolson stays stable, accuracy is O(dt^2)");

  const bool harmonic_pair =
      s.u.kind == hhm::InteractionSpec::Kind::moshinsky || s.u.kind == hhm::InteractionSpec::Kind::none;
  if ((sub == "verify-moshinsky" || sub == "check-dvt-interacting") && !harmonic_pair)
    r.fail({"interaction", "kind"}, sub + " needs a harmonic pair force (moshinsky or none), got " + s.u.name());
  return s;
}

}  // namespace hhmlab
