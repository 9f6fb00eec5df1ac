#pragma once

#include <string>
#include <vector>

namespace hhm {

/// Pair interaction u(s) at relative separation s.
struct InteractionSpec {
  enum class Kind { none, moshinsky, softened_coulomb, inverse_square };

  Kind kind = Kind::none;
  double force_constant = 0.0;  // moshinsky K
  double strength = 0.0;        // softened_coulomb lambda, inverse_square g
  double softening = 1.0;       // softened_coulomb a

  static InteractionSpec none() { return {}; }
  /// u(s) = -(1/2) K s^2.
  static InteractionSpec moshinsky(double K);
  /// u(s) = lambda / sqrt(s^2 + a^2), a > 0.
  static InteractionSpec softened_coulomb(double lambda, double a);
  /// u(s) = g / s^2.
  static InteractionSpec inverse_square(double g);

  double operator()(double s) const;
  std::string name() const;
};

/// Confinement frequency omega(t) of the external harmonic well.
struct FrequencyProtocol {
  enum class Kind { constant, sudden_switch, linear_ramp, sinusoidal };

  Kind kind = Kind::constant;
  double omega0 = 1.0;
  double omega1 = 1.0;     // sudden_switch, linear_ramp
  double t_switch = 0.0;   // sudden_switch
  double t_ramp = 1.0;     // linear_ramp
  double amplitude = 0.0;  // sinusoidal
  double drive = 0.0;      // sinusoidal Omega

  static FrequencyProtocol constant(double w0);
  static FrequencyProtocol sudden_switch(double w0, double w1, double t_switch);
  static FrequencyProtocol linear_ramp(double w0, double w1, double t_ramp);
  static FrequencyProtocol sinusoidal(double w0, double amplitude, double drive);

  double omega(double t) const;
  double omega_sq(double t) const { const double w = omega(t); return w * w; }
  /// Times in (0, t_final) where omega(t) or its derivative jumps.
  std::vector<double> breakpoints(double t_final) const;
  /// Lower bound of omega on [0, t_final].
  double min_omega(double t_final) const;
  std::string name() const;
};

/// omega(t)^2 seen by the relative coordinate once a Moshinsky pair force
/// is folded into the well: omega^2 - K/mu.
struct EffectiveFrequency {
  FrequencyProtocol base;
  double shift = 0.0;  // subtracted from omega^2

  double omega_sq(double t) const { return base.omega_sq(t) - shift; }
};

/// Throws ModelInvalidError unless omega(t)^2 - K/mu > 0 on [0, t_final].
void require_bound_relative_motion(const InteractionSpec& u, const FrequencyProtocol& w,
                                   double mu, double t_final);

}  // namespace hhm
