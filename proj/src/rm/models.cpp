#include "hhm/rm/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hhm/core/errors.hpp"

namespace hhm {

InteractionSpec InteractionSpec::moshinsky(double K) {
  if (!std::isfinite(K)) throw ModelInvalidError("moshinsky: K must be finite");
  InteractionSpec u;
  u.kind = Kind::moshinsky;
  u.force_constant = K;
  return u;
}

InteractionSpec InteractionSpec::softened_coulomb(double lambda, double a) {
  if (!(a > 0.0)) throw ModelInvalidError("softened_coulomb: softening length must be > 0");
  InteractionSpec u;
  u.kind = Kind::softened_coulomb;
  u.strength = lambda;
  u.softening = a;
  return u;
}

InteractionSpec InteractionSpec::inverse_square(double g) {
  if (!(g > -0.25)) throw ModelInvalidError("inverse_square: g must exceed -1/4 (fall to center)");
  InteractionSpec u;
  u.kind = Kind::inverse_square;
  u.strength = g;
  return u;
}

double InteractionSpec::operator()(double s) const {
  switch (kind) {
    case Kind::none: return 0.0;
    case Kind::moshinsky: return -0.5 * force_constant * s * s;
    case Kind::softened_coulomb: return strength / std::sqrt(s * s + softening * softening);
    case Kind::inverse_square: return strength / (s * s);
  }
  return 0.0;
}

std::string InteractionSpec::name() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::none: os << "none"; break;
    case Kind::moshinsky: os << "moshinsky(K=" << force_constant << ")"; break;
    case Kind::softened_coulomb:
      os << "softened_coulomb(lambda=" << strength << ",a=" << softening << ")";
      break;
    case Kind::inverse_square: os << "inverse_square(g=" << strength << ")"; break;
  }
  return os.str();
}

FrequencyProtocol FrequencyProtocol::constant(double w0) {
  if (!(w0 > 0.0)) throw ModelInvalidError("frequency: omega0 must be > 0");
  FrequencyProtocol p;
  p.omega0 = p.omega1 = w0;
  return p;
}

FrequencyProtocol FrequencyProtocol::sudden_switch(double w0, double w1, double t_switch) {
  if (!(w0 > 0.0) || !(w1 > 0.0)) throw ModelInvalidError("frequency: omegas must be > 0");
  if (!(t_switch >= 0.0)) throw ModelInvalidError("frequency: t_switch must be >= 0");
  FrequencyProtocol p;
  p.kind = Kind::sudden_switch;
  p.omega0 = w0;
  p.omega1 = w1;
  p.t_switch = t_switch;
  return p;
}

FrequencyProtocol FrequencyProtocol::linear_ramp(double w0, double w1, double t_ramp) {
  if (!(w0 > 0.0) || !(w1 > 0.0)) throw ModelInvalidError("frequency: omegas must be > 0");
  if (!(t_ramp > 0.0)) throw ModelInvalidError("frequency: t_ramp must be > 0");
  FrequencyProtocol p;
  p.kind = Kind::linear_ramp;
  p.omega0 = w0;
  p.omega1 = w1;
  p.t_ramp = t_ramp;
  return p;
}

FrequencyProtocol FrequencyProtocol::sinusoidal(double w0, double amplitude, double drive) {
  if (!(w0 > 0.0)) throw ModelInvalidError("frequency: omega0 must be > 0");
  if (!(std::abs(amplitude) < w0))
    throw ModelInvalidError("frequency: |amplitude| must stay below omega0");
  FrequencyProtocol p;
  p.kind = Kind::sinusoidal;
  p.omega0 = p.omega1 = w0;
  p.amplitude = amplitude;
  p.drive = drive;
  return p;
}

double FrequencyProtocol::omega(double t) const {
  switch (kind) {
    case Kind::constant: return omega0;
    case Kind::sudden_switch: return t < t_switch ? omega0 : omega1;
    case Kind::linear_ramp: return omega0 + (omega1 - omega0) * std::min(t / t_ramp, 1.0);
    case Kind::sinusoidal: return omega0 + amplitude * std::sin(drive * t);
  }
  return omega0;
}

std::vector<double> FrequencyProtocol::breakpoints(double t_final) const {
  std::vector<double> out;
  if (kind == Kind::sudden_switch && t_switch > 0.0 && t_switch < t_final) out.push_back(t_switch);
  if (kind == Kind::linear_ramp && t_ramp < t_final) out.push_back(t_ramp);
  return out;
}

double FrequencyProtocol::min_omega(double t_final) const {
  switch (kind) {
    case Kind::constant: return omega0;
    case Kind::sudden_switch: return t_switch <= t_final ? std::min(omega0, omega1) : omega0;
    case Kind::linear_ramp: return std::min(omega0, omega(t_final));
    case Kind::sinusoidal: return omega0 - std::abs(amplitude);
  }
  return omega0;
}

std::string FrequencyProtocol::name() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::constant: os << "constant(" << omega0 << ")"; break;
    case Kind::sudden_switch:
      os << "sudden_switch(" << omega0 << "->" << omega1 << "@" << t_switch << ")";
      break;
    case Kind::linear_ramp:
      os << "linear_ramp(" << omega0 << "->" << omega1 << " over " << t_ramp << ")";
      break;
    case Kind::sinusoidal:
      os << "sinusoidal(" << omega0 << "+" << amplitude << "sin(" << drive << "t))";
      break;
  }
  return os.str();
}

void require_bound_relative_motion(const InteractionSpec& u, const FrequencyProtocol& w, double mu,
                                   double t_final) {
  if (u.kind != InteractionSpec::Kind::moshinsky) return;
  const double wmin = w.min_omega(t_final);
  if (!(wmin * wmin - u.force_constant / mu > 0.0)) {
    std::ostringstream os;
    os << "moshinsky: omega(t)^2 - K/mu must stay positive (min omega " << wmin << ", K "
       << u.force_constant << "); relative motion would be unbound";
    throw ModelInvalidError(os.str());
  }
}

}  // namespace hhm
