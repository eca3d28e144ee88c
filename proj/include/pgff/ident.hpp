#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pgff/feedback.hpp"
#include "pgff/feedforward.hpp"
#include "pgff/mlp.hpp"
#include "pgff/plant.hpp"
#include "pgff/trajgen.hpp"

namespace pgff {

/// Zero-mean Gaussian force noise, redrawn every `period` seconds and held.
struct DitherConfig {
  double std_dev = 80.0;  // N
  double period = 0.01;   // s

  /// Number of samples each draw is held at sample time `ts`.
  std::size_t hold_samples(double ts) const;
  void validate(double ts) const;
  bool operator==(const DitherConfig&) const = default;
};

enum class Partition : std::uint8_t { Unused, Train, Validation, Test };

std::string_view to_string(Partition p);

/// Contiguous split of the usable rows [first, end) in time order.
struct Split {
  std::size_t first = 0;        // first usable row
  std::size_t validation = 0;   // first validation row
  std::size_t test = 0;         // first test row
  std::size_t end = 0;          // one past the last usable row

  Partition label(std::size_t k) const;
  std::vector<std::size_t> rows(Partition p) const;
  bool operator==(const Split&) const = default;
};

/// Usable rows are k in [2, n-2], so that y(k+1) and y(k-2) exist. Train gets
/// floor(train_fraction * usable) rows, validation floor(validation_fraction
/// * usable), test the rest.
Split make_split(std::size_t n, double train_fraction = 0.70, double validation_fraction = 0.15);

struct DatasetMeta {
  std::uint64_t seed = 0;
  DitherConfig dither;
  TrajectorySpec trajectory;
  int cycles = 0;
  std::string feedback_form;
  std::string feedforward;
};

struct Dataset {
  std::vector<double> t, r, y, u;
  Split split;
  DatasetMeta meta;

  std::size_t size() const { return t.size(); }
  double sample_time() const { return meta.trajectory.sample_time; }
  Partition label(std::size_t k) const { return split.label(k); }
};

struct GenerateOptions {
  int cycles = 4;
  DitherConfig dither;
  std::uint64_t seed = 1;
  FeedbackDesign feedback;
  /// Feedforward active during collection; none when null.
  const FeedforwardController* feedforward = nullptr;
  double train_fraction = 0.70;
  double validation_fraction = 0.15;
};

/// Closed-loop run over `cycles` back-and-forth moves with dithered input.
/// Logs the total plant input. Throws NumericalError when |y| exceeds ten
/// times the stroke.
Dataset generate_dataset(const PlantParams& plant, const TrajectorySpec& traj,
                         const GenerateOptions& opt);

/// k,t,r,y,u with 17 significant digits.
void write_dataset_csv(std::ostream& os, const Dataset& d);
/// Reads the CSV written above; meta and split are left default.
Dataset read_dataset_csv(std::istream& is);
/// Generation metadata and split boundaries as JSON.
std::string dataset_meta_json(const Dataset& d);
/// Applies a sidecar produced by dataset_meta_json().
void apply_dataset_meta(Dataset& d, const std::string& json_text);

/// Linear regression target = X * theta.
struct LinearRegression {
  Eigen::MatrixXd x;
  Eigen::VectorXd target;
};

/// Rows k of the friction-compensator structure on measured data:
///   u(k) + u(k-1) = m a(k) + f_v (v(k) + v(k-1)) + f_c (sign v(k) + sign v(k-1)),
/// with a the ZOH second difference and v the central velocity of y.
/// Columns are {a, v + v_prev, sign v + sign v_prev}.
LinearRegression ident_regression(const Dataset& d, const std::vector<std::size_t>& rows);

/// Least-squares solution via column-pivoted QR. Throws InvalidArgument when
/// the regressor matrix is rank deficient.
Eigen::VectorXd solve_least_squares(const LinearRegression& reg);

struct IdentResult {
  PhysicalEstimates estimates;
  double residual_mse = 0.0;  // N^2, per row of the summed-force regression
  std::size_t rows = 0;
};

/// Fits m, f_v, f_c on the given partition.
IdentResult ls_identify(const Dataset& d, Partition part = Partition::Train);
/// Fits m alone (friction coefficients zero) on the same rows.
IdentResult ls_identify_mass_only(const Dataset& d, Partition part = Partition::Train);

/// Normalized regression data for one network input spec, built from measured
/// y in place of r and measured u(t-1). Scalers are fitted on the train rows.
struct RegressionSet {
  DataPartitions data;
  AffineScaler input_scaler;
  AffineScaler output_scaler;
  InputSpec spec;
};

RegressionSet build_regression(const Dataset& d, const InputSpec& spec);

/// Physical feature row for sample k of the dataset (y in place of r).
std::vector<double> measured_features(const Dataset& d, const InputSpec& spec, std::size_t k);

}  // namespace pgff
