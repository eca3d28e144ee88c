#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "pgff/error.hpp"
#include "pgff/signals.hpp"
#include "pgff/trajgen.hpp"

using namespace pgff;

namespace {

std::vector<double> random_series(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> r(n);
  for (auto& x : r) x = d(rng);
  return r;
}

}  // namespace

TEST_CASE("central velocity of constant and linear series") {
  const double ts = 1e-4;
  std::vector<double> flat(10, 0.3);
  for (std::size_t k = 1; k + 1 < flat.size(); ++k) CHECK(central_velocity(flat, k, ts) == 0.0);

  const double c = 0.05;
  std::vector<double> ramp(10);
  for (std::size_t k = 0; k < ramp.size(); ++k) ramp[k] = c * static_cast<double>(k) * ts;
  for (std::size_t k = 1; k + 1 < ramp.size(); ++k)
    CHECK(central_velocity(ramp, k, ts) == doctest::Approx(c).epsilon(1e-12).scale(0));
}

TEST_CASE("central velocity rejects boundary indices") {
  std::vector<double> r(5, 0.0);
  CHECK_THROWS_AS(central_velocity(r, 0, 1e-4), InvalidArgument);
  CHECK_THROWS_AS(central_velocity(r, 4, 1e-4), InvalidArgument);
  CHECK_THROWS_AS(zoh_accel(r, 0, 1e-4), InvalidArgument);
  CHECK_THROWS_AS(zoh_accel(r, 4, 1e-4), InvalidArgument);
}

TEST_CASE("zoh second difference is twice the physical acceleration") {
  const double ts = 1e-4, a = 3.0;
  std::vector<double> q(12);
  for (std::size_t k = 0; k < q.size(); ++k) {
    const double t = static_cast<double>(k) * ts;
    q[k] = 0.5 * a * t * t;
  }
  for (std::size_t k = 1; k + 1 < q.size(); ++k)
    CHECK(zoh_accel(q, k, ts) == doctest::Approx(2.0 * a).epsilon(1e-6).scale(0));

  std::vector<double> flat(6, -1.0);
  CHECK(zoh_accel(flat, 2, ts) == 0.0);
}

TEST_CASE("difference operators on the nominal profile") {
  const SetpointProfile p = plan_motion(TrajectorySpec{});
  const double ts = p.sample_time();
  std::size_t cruise = 0, const_accel = 0;
  for (std::size_t k = 1; k + 1 < p.size(); ++k) {
    if (p.segments[k] == Segment::Cruise && p.segments[k - 1] == Segment::Cruise &&
        p.segments[k + 1] == Segment::Cruise) {
      CHECK(std::abs(central_velocity(p.positions, k, ts) - 0.05) < 1e-9);
      ++cruise;
    }
    const double acc = zoh_accel(p.positions, k, ts);
    if (std::abs(acc - 8.0) < 1e-3) {
      CHECK(std::abs(acc - 8.0) < 1e-6);
      ++const_accel;
    }
  }
  CHECK(cruise > 1000);
  CHECK(const_accel > 50);
}

TEST_CASE("difference operators are linear") {
  const double ts = 1e-4, a = 1.7, b = -0.4;
  const auto r1 = random_series(50, 1);
  const auto r2 = random_series(50, 2);
  std::vector<double> mix(50);
  for (std::size_t k = 0; k < mix.size(); ++k) mix[k] = a * r1[k] + b * r2[k];
  for (std::size_t k = 1; k + 1 < mix.size(); ++k) {
    const double v = a * central_velocity(r1, k, ts) + b * central_velocity(r2, k, ts);
    CHECK(central_velocity(mix, k, ts) == doctest::Approx(v).epsilon(1e-10).scale(0));
    const double acc = a * zoh_accel(r1, k, ts) + b * zoh_accel(r2, k, ts);
    CHECK(zoh_accel(mix, k, ts) == doctest::Approx(acc).epsilon(1e-9).scale(0));
  }
}

TEST_CASE("sign0") {
  CHECK(sign0(0.0) == 0.0);
  CHECK(sign0(-0.0) == 0.0);
  CHECK(sign0(1e-300) == 1.0);
  CHECK(sign0(-0.05) == -1.0);
}

TEST_CASE("scaler fit maps training extremes onto the unit interval") {
  const auto s = AffineScaler::fit({{0.0, 0.05, 0.02}});
  CHECK(s.normalize(0, 0.0) == doctest::Approx(-1.0).scale(0));
  CHECK(s.normalize(0, 0.05) == doctest::Approx(1.0).scale(0));

  const auto sg = AffineScaler::fit({{-1.0, 0.0, 1.0, 1.0}});
  for (double x : {-1.0, 0.0, 1.0}) CHECK(sg.normalize(0, x) == x);
}

TEST_CASE("scaler rejects constant and empty columns") {
  CHECK_THROWS_AS(AffineScaler::fit({{2.0, 2.0, 2.0}}), InvalidArgument);
  CHECK_THROWS_AS(AffineScaler::fit({{}}), InvalidArgument);
  CHECK_THROWS_AS(AffineScaler({0.0}, {0.0}), InvalidArgument);
}

TEST_CASE("scaler round trip") {
  std::vector<std::vector<double>> cols(3);
  for (std::size_t c = 0; c < 3; ++c) cols[c] = random_series(100, 10 + static_cast<unsigned>(c));
  for (auto& x : cols[2]) x *= 1e4;
  const auto s = AffineScaler::fit(cols);
  const auto probe = random_series(300, 99);
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const std::size_t c = i % 3;
    const double x = probe[i] * (c == 2 ? 1e4 : 1.0);
    worst = std::max(worst, std::abs(s.denormalize(c, s.normalize(c, x)) - x) /
                                std::max(1.0, std::abs(x)));
    worst = std::max(worst, std::abs(s.normalize(c, s.denormalize(c, probe[i])) - probe[i]));
  }
  CHECK(worst < 1e-12);

  std::vector<double> in{0.1, -0.2, 3000.0}, mid(3), out(3);
  s.normalize(in, mid);
  s.denormalize(mid, out);
  for (std::size_t c = 0; c < 3; ++c) CHECK(out[c] == doctest::Approx(in[c]).epsilon(1e-12).scale(0));
}
