#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pgff {

/// Returns -1, 0 or +1. Zero maps to zero.
constexpr double sign0(double x) noexcept {
  return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
}

/// Central-difference velocity (r(k+1) - r(k-1)) / (2 Ts).
/// Throws InvalidArgument if k-1 or k+1 is outside the series.
double central_velocity(std::span<const double> r, std::size_t k, double ts);

/// Second difference paired with the zero-order-hold inverse:
/// (2 / Ts^2) (r(k+1) - 2 r(k) + r(k-1)).
///
/// Note the factor 2. For a sampled quadratic with physical acceleration a the
/// result is 2a, because the operator is meant to be combined with the
/// (1 + q^-1) averaging of two consecutive force samples.
double zoh_accel(std::span<const double> r, std::size_t k, double ts);

/// Per-channel min-max map onto [-1, 1]:  x_n = (x - center) / half_range.
class AffineScaler {
 public:
  AffineScaler() = default;
  AffineScaler(std::vector<double> center, std::vector<double> half_range);

  /// Identity map for `channels` channels.
  static AffineScaler identity(std::size_t channels);

  /// Fits on column-major data: columns[c] holds all samples of channel c.
  /// Throws InvalidArgument on an empty or constant column.
  static AffineScaler fit(const std::vector<std::vector<double>>& columns);

  std::size_t channels() const noexcept { return center_.size(); }
  bool empty() const noexcept { return center_.empty(); }

  double normalize(std::size_t channel, double x) const {
    return (x - center_[channel]) / half_range_[channel];
  }
  double denormalize(std::size_t channel, double x) const {
    return x * half_range_[channel] + center_[channel];
  }

  void normalize(std::span<const double> in, std::span<double> out) const;
  void denormalize(std::span<const double> in, std::span<double> out) const;

  const std::vector<double>& center() const noexcept { return center_; }
  const std::vector<double>& half_range() const noexcept { return half_range_; }

  bool operator==(const AffineScaler&) const = default;

 private:
  std::vector<double> center_;
  std::vector<double> half_range_;
};

}  // namespace pgff
