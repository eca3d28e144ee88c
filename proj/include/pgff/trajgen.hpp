#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

namespace pgff {

/// Limits and timing of a symmetric jerk-limited point-to-point move.
struct TrajectorySpec {
  double displacement = 0.05;  // m
  double v_max = 0.05;         // m/s
  double a_max = 4.0;          // m/s^2
  double j_max = 1000.0;       // m/s^3
  /// Share of cruise samples in the whole profile, dwell included.
  double cruise_fraction = 0.5;
  double sample_time = 1e-4;  // s
  /// Total dwell per move. When unset, dwell is sized from cruise_fraction.
  std::optional<double> dwell_time;

  void validate() const;
  bool operator==(const TrajectorySpec&) const = default;
};

enum class Segment : std::uint8_t { Dwell, Accel, Cruise, Decel };

std::string_view to_string(Segment s);

/// Constant-jerk interval of the continuous profile.
struct JerkPhase {
  double duration = 0.0;  // s
  double jerk = 0.0;      // m/s^3
};

struct SetpointProfile {
  TrajectorySpec spec;
  std::vector<double> positions;
  std::vector<Segment> segments;
  /// Piecewise-constant jerk that, integrated from rest at the origin,
  /// reproduces `positions` at t = k * sample_time. Durations sum to
  /// positions.size() * sample_time.
  std::vector<JerkPhase> phases;

  std::size_t size() const noexcept { return positions.size(); }
  double sample_time() const noexcept { return spec.sample_time; }
  std::size_t count(Segment s) const;
};

/// Symmetric 7-phase jerk-limited move from 0 to spec.displacement, sampled
/// analytically, padded with dwell on both ends. Throws InvalidArgument when
/// the spec is invalid or the limits cannot be met within the displacement.
SetpointProfile plan_motion(const TrajectorySpec& spec);

/// Forward move followed by the mirrored return, repeated `cycles` times.
SetpointProfile back_and_forth(const SetpointProfile& profile, int cycles);

/// Scales v_max and a_max; everything else is kept.
TrajectorySpec scaled_spec(const TrajectorySpec& base, double velocity_scale,
                           double accel_scale);

/// CSV with header k,t,r and 17 significant digits.
void write_profile_csv(std::ostream& os, const SetpointProfile& profile);

}  // namespace pgff
