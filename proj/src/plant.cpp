#include "pgff/plant.hpp"

#include <cmath>

#include "pgff/error.hpp"
#include "pgff/signals.hpp"

namespace pgff {

void FrictionParams::validate() const {
  const bool finite = std::isfinite(viscous) && std::isfinite(coulomb) &&
                      std::isfinite(stribeck) && std::isfinite(stribeck_velocity) &&
                      std::isfinite(ripple) && std::isfinite(ripple_frequency);
  if (!finite) throw InvalidArgument("friction parameters must be finite");
  if (viscous < 0.0) throw InvalidArgument("friction: f_v must be >= 0");
  if (coulomb < 0.0) throw InvalidArgument("friction: f_c must be >= 0");
  if (stribeck < coulomb) throw InvalidArgument("friction: f_s must be >= f_c");
  if (coulomb < std::abs(ripple)) throw InvalidArgument("friction: f_c must be >= |c_1|");
  if (!(stribeck_velocity > 0.0)) throw InvalidArgument("friction: v_s must be > 0");
}

void PlantParams::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw InvalidArgument("plant: mass must be > 0");
  if (!(sample_time > 0.0) || !std::isfinite(sample_time)) {
    throw InvalidArgument("plant: sample_time must be > 0");
  }
  friction.validate();
  if (ripple && !(std::isfinite(ripple->amplitude) &&
                  std::isfinite(ripple->spatial_frequency) && std::isfinite(ripple->phase))) {
    throw InvalidArgument("plant: ripple parameters must be finite");
  }
}

double friction_force(double position, double velocity, const FrictionParams& p) {
  const double s = sign0(velocity);
  const double ratio = velocity / p.stribeck_velocity;
  return p.viscous * velocity + p.coulomb * s +
         (p.stribeck - p.coulomb) * s * std::exp(-ratio * ratio) +
         p.ripple * std::sin(p.ripple_frequency * position);
}

double parasitic_force(double position, double velocity, const PlantParams& p) {
  double f = friction_force(position, velocity, p.friction);
  if (p.ripple) {
    f += p.ripple->amplitude *
         std::sin(p.ripple->spatial_frequency * position + p.ripple->phase);
  }
  return f;
}

PlantState step(const PlantState& state, double u, const PlantParams& p) {
  const double ts = p.sample_time;
  const double accel = (u - parasitic_force(state.position, state.velocity, p)) / p.mass;
  return {state.position + ts * state.velocity + 0.5 * ts * ts * accel,
          state.velocity + ts * accel};
}

std::vector<double> transfer_form_response(std::span<const double> u,
                                           std::span<const double> parasitic,
                                           const PlantParams& p) {
  if (u.size() != parasitic.size()) {
    throw InvalidArgument("transfer_form_response: u and parasitic force lengths differ");
  }
  // (1 - q^-1)^2 y(k) = g (F(k-1) + F(k-2)),  g = Ts^2 / (2m), F = u - parasitic.
  const double g = p.sample_time * p.sample_time / (2.0 * p.mass);
  std::vector<double> y(u.size(), 0.0);
  auto net = [&](std::size_t k) { return u[k] - parasitic[k]; };
  for (std::size_t k = 1; k < y.size(); ++k) {
    const double y1 = y[k - 1];
    const double y2 = k >= 2 ? y[k - 2] : 0.0;
    const double f1 = net(k - 1);
    const double f2 = k >= 2 ? net(k - 2) : 0.0;
    y[k] = 2.0 * y1 - y2 + g * (f1 + f2);
  }
  return y;
}

}  // namespace pgff
