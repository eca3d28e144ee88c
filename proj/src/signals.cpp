#include "pgff/signals.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pgff/error.hpp"

namespace pgff {

namespace {

void check_interior(std::span<const double> r, std::size_t k) {
  if (k == 0 || k + 1 >= r.size()) {
    throw InvalidArgument("difference operator needs samples k-1 and k+1; k=" +
                          std::to_string(k) + ", size=" + std::to_string(r.size()));
  }
}

}  // namespace

double central_velocity(std::span<const double> r, std::size_t k, double ts) {
  check_interior(r, k);
  return (r[k + 1] - r[k - 1]) / (2.0 * ts);
}

double zoh_accel(std::span<const double> r, std::size_t k, double ts) {
  check_interior(r, k);
  return 2.0 / (ts * ts) * (r[k + 1] - 2.0 * r[k] + r[k - 1]);
}

AffineScaler::AffineScaler(std::vector<double> center, std::vector<double> half_range)
    : center_(std::move(center)), half_range_(std::move(half_range)) {
  if (center_.size() != half_range_.size()) {
    throw InvalidArgument("scaler center/half_range size mismatch");
  }
  for (std::size_t c = 0; c < half_range_.size(); ++c) {
    if (!(half_range_[c] > 0.0) || !std::isfinite(half_range_[c]) ||
        !std::isfinite(center_[c])) {
      throw InvalidArgument("scaler channel " + std::to_string(c) +
                            " has non-positive or non-finite half range");
    }
  }
}

AffineScaler AffineScaler::identity(std::size_t channels) {
  return AffineScaler(std::vector<double>(channels, 0.0),
                      std::vector<double>(channels, 1.0));
}

AffineScaler AffineScaler::fit(const std::vector<std::vector<double>>& columns) {
  std::vector<double> center;
  std::vector<double> half;
  center.reserve(columns.size());
  half.reserve(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto& col = columns[c];
    if (col.empty()) {
      throw InvalidArgument("cannot fit scaler on empty column " + std::to_string(c));
    }
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    const double h = 0.5 * (*hi - *lo);
    if (!(h > 0.0)) {
      throw InvalidArgument("cannot fit scaler: column " + std::to_string(c) +
                            " is constant (zero half-range)");
    }
    center.push_back(0.5 * (*hi + *lo));
    half.push_back(h);
  }
  return AffineScaler(std::move(center), std::move(half));
}

void AffineScaler::normalize(std::span<const double> in, std::span<double> out) const {
  if (in.size() != channels() || out.size() != channels()) {
    throw InvalidArgument("scaler dimension mismatch");
  }
  for (std::size_t c = 0; c < in.size(); ++c) out[c] = normalize(c, in[c]);
}

void AffineScaler::denormalize(std::span<const double> in, std::span<double> out) const {
  if (in.size() != channels() || out.size() != channels()) {
    throw InvalidArgument("scaler dimension mismatch");
  }
  for (std::size_t c = 0; c < in.size(); ++c) out[c] = denormalize(c, in[c]);
}

}  // namespace pgff
