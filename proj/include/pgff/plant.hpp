#pragma once

#include <optional>
#include <span>
#include <vector>

namespace pgff {

/// Static friction map: viscous, Coulomb, Stribeck and a position-periodic term.
struct FrictionParams {
  double viscous = 41.22;              // f_v, N/(m/s)
  double coulomb = 8.72;               // f_c, N
  double stribeck = 14.63;             // f_s, N
  double stribeck_velocity = 1.23e-3;  // v_s, m/s
  double ripple = -1.44;               // c_1, N
  double ripple_frequency = 2.21;      // omega, rad/m

  /// Values identified on the reference linear motor.
  static FrictionParams reference() { return {}; }
  /// All coefficients zero.
  static FrictionParams none() { return {0.0, 0.0, 0.0, 1.0, 0.0, 0.0}; }

  /// f_v, f_c >= 0, f_s >= f_c >= |c_1|, v_s > 0.
  void validate() const;
  bool operator==(const FrictionParams&) const = default;
};

/// Optional position-dependent force disturbance standing in for an
/// unmodelled electromagnetic ripple: amplitude * sin(k * y + phase).
struct ForceRipple {
  double amplitude = 0.0;          // N
  double spatial_frequency = 0.0;  // rad/m
  double phase = 0.0;              // rad

  bool operator==(const ForceRipple&) const = default;
};

struct PlantParams {
  double mass = 19.96;  // kg
  FrictionParams friction;
  std::optional<ForceRipple> ripple;
  double sample_time = 1e-4;  // s

  static PlantParams reference() { return {}; }

  void validate() const;
  bool operator==(const PlantParams&) const = default;
};

struct PlantState {
  double position = 0.0;  // m
  double velocity = 0.0;  // m/s

  bool operator==(const PlantState&) const = default;
};

/// f_v v + f_c sign(v) + (f_s - f_c) sign(v) exp(-(v/v_s)^2) + c_1 sin(omega y),
/// with sign(0) = 0.
double friction_force(double position, double velocity, const FrictionParams& p);

/// Total parasitic force: friction plus the optional ripple.
double parasitic_force(double position, double velocity, const PlantParams& p);

/// One zero-order-hold step. The net force u - parasitic(y, v) is evaluated at
/// the pre-step state and held over the interval, which makes the update the
/// exact solution of m y'' = const over one sample.
PlantState step(const PlantState& state, double u, const PlantParams& p);

/// Position response from the transfer-function form of the same
/// discretization,
///   y = Ts^2/(2m) (q^-1 + q^-2)/(1 - q^-1)^2 (u - F),
/// starting from rest. `parasitic` holds the per-sample parasitic force F(k)
/// as produced by the state recursion. Exists as a cross-check of step().
std::vector<double> transfer_form_response(std::span<const double> u,
                                           std::span<const double> parasitic,
                                           const PlantParams& p);

}  // namespace pgff
