#include "pgff/trajgen.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <string>

#include "pgff/error.hpp"
#include "text_format.hpp"

namespace pgff {

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

// Continuous-time move: seven constant-jerk phases, total duration `total`.
struct MoveShape {
  std::array<JerkPhase, 7> phases;
  double accel_time = 0.0;   // end of the acceleration phases
  double cruise_time = 0.0;  // duration of the cruise phase
  double total = 0.0;
  double displacement = 0.0;

  // Position at tau for tau in [0, total/2], by stepping through the phases.
  double first_half_position(double tau) const {
    double p = 0.0, v = 0.0, a = 0.0, t0 = 0.0;
    for (const auto& ph : phases) {
      const double d = ph.duration;
      if (tau <= t0 + d) {
        const double s = tau - t0;
        return p + v * s + a * s * s / 2.0 + ph.jerk * s * s * s / 6.0;
      }
      p += v * d + a * d * d / 2.0 + ph.jerk * d * d * d / 6.0;
      v += a * d + ph.jerk * d * d / 2.0;
      a += ph.jerk * d;
      t0 += d;
    }
    return p;
  }

  double position(double tau) const {
    if (tau <= 0.0) return 0.0;
    if (tau >= total) return displacement;
    if (tau <= total / 2.0) return first_half_position(tau);
    // Point symmetry about the midpoint keeps the sampled profile exactly
    // mirrored and pins the final sample to the endpoint.
    return displacement - first_half_position(total - tau);
  }

  Segment segment(double tau) const {
    if (tau <= 0.0 || tau >= total) return Segment::Dwell;
    if (tau < accel_time) return Segment::Accel;
    if (tau <= accel_time + cruise_time) return Segment::Cruise;
    return Segment::Decel;
  }
};

MoveShape shape_move(const TrajectorySpec& spec) {
  const double v = spec.v_max;
  const double a = spec.a_max;
  const double j = spec.j_max;

  double jerk_time = 0.0;
  double const_accel_time = 0.0;
  if (v * j >= a * a) {
    jerk_time = a / j;
    const_accel_time = v / a - a / j;
  } else {
    // a_max is never reached: triangular acceleration pulse.
    jerk_time = std::sqrt(v / j);
  }
  const double accel_time = 2.0 * jerk_time + const_accel_time;
  const double accel_distance = v * accel_time / 2.0;
  const double cruise_distance = spec.displacement - 2.0 * accel_distance;
  if (cruise_distance < 0.0) {
    std::ostringstream msg;
    msg << "infeasible trajectory: v_max=" << v << " m/s is unreachable before the "
        << "midpoint (needs " << 2.0 * accel_distance << " m, displacement is "
        << spec.displacement << " m)";
    throw InvalidArgument(msg.str());
  }

  MoveShape m;
  m.accel_time = accel_time;
  m.cruise_time = cruise_distance / v;
  m.total = 2.0 * accel_time + m.cruise_time;
  m.displacement = spec.displacement;
  m.phases = {{{jerk_time, j},
               {const_accel_time, 0.0},
               {jerk_time, -j},
               {m.cruise_time, 0.0},
               {jerk_time, -j},
               {const_accel_time, 0.0},
               {jerk_time, j}}};
  return m;
}

SetpointProfile dwell_only(const TrajectorySpec& spec) {
  std::size_t n = 1;
  if (spec.dwell_time) {
    n = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(*spec.dwell_time / spec.sample_time)));
  }
  SetpointProfile out;
  out.spec = spec;
  out.positions.assign(n, 0.0);
  out.segments.assign(n, Segment::Dwell);
  out.phases.push_back({static_cast<double>(n) * spec.sample_time, 0.0});
  return out;
}

}  // namespace

void TrajectorySpec::validate() const {
  std::string bad;
  if (!std::isfinite(displacement) || displacement < 0.0) bad = "displacement";
  else if (!positive_finite(v_max)) bad = "v_max";
  else if (!positive_finite(a_max)) bad = "a_max";
  else if (!positive_finite(j_max)) bad = "j_max";
  else if (!positive_finite(sample_time)) bad = "sample_time";
  else if (!(cruise_fraction > 0.0 && cruise_fraction < 1.0)) bad = "cruise_fraction";
  else if (dwell_time && !(std::isfinite(*dwell_time) && *dwell_time >= 0.0))
    bad = "dwell_time";
  if (!bad.empty()) throw InvalidArgument("invalid trajectory spec: " + bad);
}

std::string_view to_string(Segment s) {
  switch (s) {
    case Segment::Dwell: return "dwell";
    case Segment::Accel: return "accel";
    case Segment::Cruise: return "cruise";
    case Segment::Decel: return "decel";
  }
  return "?";
}

std::size_t SetpointProfile::count(Segment s) const {
  std::size_t n = 0;
  for (auto seg : segments) n += (seg == s);
  return n;
}

SetpointProfile plan_motion(const TrajectorySpec& spec) {
  spec.validate();
  if (spec.displacement == 0.0) return dwell_only(spec);

  const MoveShape move = shape_move(spec);
  const double ts = spec.sample_time;

  // Sample grid centred on the move midpoint so that the sampled profile is
  // exactly point-symmetric. The first sample sits at or before the start and
  // the last at or after the end.
  const auto n_move = static_cast<std::size_t>(std::ceil(move.total / ts)) + 1;
  const double half_span = 0.5 * static_cast<double>(n_move - 1) * ts;
  auto tau_at = [&](std::size_t i) {
    return move.total / 2.0 + static_cast<double>(i) * ts - half_span;
  };

  std::vector<double> move_pos(n_move);
  std::vector<Segment> move_seg(n_move);
  std::size_t cruise = 0;
  for (std::size_t i = 0; i < n_move; ++i) {
    const double tau = tau_at(i);
    move_pos[i] = move.position(tau);
    move_seg[i] = move.segment(tau);
    cruise += (move_seg[i] == Segment::Cruise);
  }

  long long dwell = 0;
  if (spec.dwell_time) {
    dwell = std::llround(*spec.dwell_time / ts);
  } else {
    const long long total =
        std::llround(static_cast<double>(cruise) / spec.cruise_fraction);
    dwell = total - static_cast<long long>(n_move);
  }
  if (dwell < 2) {
    std::ostringstream msg;
    msg << "infeasible trajectory: cruise_fraction=" << spec.cruise_fraction
        << " leaves no room for dwell (move has " << cruise << " cruise samples of "
        << n_move << ")";
    throw InvalidArgument(msg.str());
  }
  const auto lead = static_cast<std::size_t>(dwell / 2);
  const auto trail = static_cast<std::size_t>(dwell) - lead;

  SetpointProfile out;
  out.spec = spec;
  out.positions.reserve(lead + n_move + trail);
  out.positions.insert(out.positions.end(), lead, 0.0);
  out.positions.insert(out.positions.end(), move_pos.begin(), move_pos.end());
  out.positions.insert(out.positions.end(), trail, spec.displacement);
  out.segments.reserve(out.positions.size());
  out.segments.insert(out.segments.end(), lead, Segment::Dwell);
  out.segments.insert(out.segments.end(), move_seg.begin(), move_seg.end());
  out.segments.insert(out.segments.end(), trail, Segment::Dwell);

  const double start = static_cast<double>(lead) * ts + (half_span - move.total / 2.0);
  const double end = static_cast<double>(out.positions.size()) * ts;
  out.phases.push_back({start, 0.0});
  out.phases.insert(out.phases.end(), move.phases.begin(), move.phases.end());
  out.phases.push_back({end - start - move.total, 0.0});
  return out;
}

SetpointProfile back_and_forth(const SetpointProfile& profile, int cycles) {
  if (cycles < 1) throw InvalidArgument("back_and_forth needs cycles >= 1");
  if (profile.positions.empty()) throw InvalidArgument("empty profile");

  const double d = profile.spec.displacement;
  const std::size_t n = profile.size();
  SetpointProfile out;
  out.spec = profile.spec;
  out.positions.reserve(2 * n * static_cast<std::size_t>(cycles));
  out.segments.reserve(out.positions.capacity());

  for (int c = 0; c < cycles; ++c) {
    out.positions.insert(out.positions.end(), profile.positions.begin(),
                         profile.positions.end());
    for (double p : profile.positions) out.positions.push_back(d - p);
    out.segments.insert(out.segments.end(), profile.segments.begin(),
                        profile.segments.end());
    out.segments.insert(out.segments.end(), profile.segments.begin(),
                        profile.segments.end());
    out.phases.insert(out.phases.end(), profile.phases.begin(), profile.phases.end());
    for (const auto& ph : profile.phases) out.phases.push_back({ph.duration, -ph.jerk});
  }
  return out;
}

TrajectorySpec scaled_spec(const TrajectorySpec& base, double velocity_scale,
                           double accel_scale) {
  if (!positive_finite(velocity_scale) || !positive_finite(accel_scale)) {
    throw InvalidArgument("trajectory scales must be positive");
  }
  TrajectorySpec s = base;
  s.v_max *= velocity_scale;
  s.a_max *= accel_scale;
  return s;
}

void write_profile_csv(std::ostream& os, const SetpointProfile& profile) {
  os << "k,t,r\n";
  const double ts = profile.sample_time();
  for (std::size_t k = 0; k < profile.size(); ++k) {
    os << k << ',' << detail::fmt17(static_cast<double>(k) * ts) << ','
       << detail::fmt17(profile.positions[k]) << '\n';
  }
}

}  // namespace pgff
