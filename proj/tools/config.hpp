#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hhm/core/errors.hpp"
#include "hhm/density/assembly.hpp"
#include "hhm/ks/inversion.hpp"
#include "hhm/response/causality.hpp"
#include "hhm/rm/models.hpp"
#include "hhm/virial/checks.hpp"

namespace hhmlab {

/// Invalid configuration; the message carries "<file>:<line>: ...".
class ConfigError : public hhm::InputError {
 public:
  using hhm::InputError::InputError;
};

struct HptSection {
  double omega0 = 1.0, E0 = 0.1, Omega = 0.7;
  double t_final = 30.0;
  std::size_t n_steps = 6000;
  hhm::HptOptions options;
  double control_anharmonic = 0.05;  // 0 disables the control run
  double control_t_final = 10.0;
};

struct CausalitySection {
  double omega = 1.0;  // chi(t, t') = sin(omega (t - t')) / omega
  double t_final = 2.0;
  std::size_t n_steps = 2000;
  bool write_kernel = false;
};

struct Scenario {
  std::string source;  // config path, for messages
  std::string name;
  hhm::InteractionSpec u;
  hhm::FrequencyProtocol w;
  double r_max = 12.0;
  std::size_t n_points = 601;
  double s_max = 12.0;
  std::size_t s_points = 601;
  double t_final = 5.0;
  std::size_t n_steps = 2500;
  std::size_t stride = 10;
  double k_max = 6.0;
  std::size_t n_k = 61;
  hhm::QuadratureSpec quad;
  hhm::RoundtripOptions roundtrip;
  hhm::ResidualOptions residual;
  hhm::PairQuadrature pair;
  HptSection hpt;
  hhm::ChiScenario chi;
  std::vector<hhm::Perturbation> perturbations{{5, 20, 1e-4}};
  CausalitySection causality;
  std::map<std::string, double> tol;
  std::vector<std::string> warnings;
  unsigned jobs = 1;

  double tolerance(const std::string& name) const { return tol.at(name); }
  hhm::RadialGrid grid() const { return {r_max, n_points}; }
  hhm::RadialGrid rm_grid() const { return {s_max, s_points}; }
  hhm::TimeGrid times() const { return {t_final, n_steps}; }
};

/// Default tolerances; every check threshold is looked up here by name.
const std::map<std::string, double>& default_tolerances();

/// Parses and validates; `overrides` are "name=value" tolerance strings.
/// Throws ConfigError.
Scenario load_scenario(const std::filesystem::path& path, const std::vector<std::string>& overrides,
                       const std::string& subcommand);

}  // namespace hhmlab
