#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pgff/signals.hpp"

namespace pgff {

enum class Activation { Linear, Relu, Tansig };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

/// tansig(x) = 2 / (1 + exp(-2x)) - 1
double tansig(double x);

struct DenseLayer {
  Eigen::MatrixXd weights;  // outputs x inputs
  Eigen::VectorXd bias;     // outputs
  Activation activation = Activation::Linear;

  std::size_t inputs() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t outputs() const { return static_cast<std::size_t>(weights.rows()); }
};

/// Linear layer parallel to the hidden layers: feeds selected network inputs
/// straight into the output sum (identity transform).
struct PhysicsBranch {
  std::vector<std::size_t> inputs;  // indices into the network input vector
  Eigen::MatrixXd weights;          // outputs x inputs.size()
};

/// Descriptive fields carried through serialization.
struct ModelInfo {
  std::string kind;
  std::vector<std::string> input_features;
  double sample_time = 0.0;

  bool operator==(const ModelInfo&) const = default;
};

/// Dense feedforward network in normalized coordinates, plus the scalers that
/// map physical inputs/outputs to and from those coordinates.
///
/// Output = last layer(...layer 1(x)) + pgl.weights * x[pgl.inputs].
/// The output layer is linear.
struct Mlp {
  std::vector<DenseLayer> layers;
  std::optional<PhysicsBranch> pgl;
  AffineScaler input_scaler;
  AffineScaler output_scaler;
  ModelInfo info;

  /// Zero-initialized network: inputs -> hidden... -> outputs.
  static Mlp make(std::size_t inputs, const std::vector<std::size_t>& hidden,
                  Activation hidden_activation, std::size_t outputs = 1);

  std::size_t input_size() const;
  std::size_t output_size() const;

  /// Throws InvalidArgument on inconsistent dimensions or activations.
  void validate() const;

  /// Flat parameter vector: per layer W (row-major) then b, then PGL weights.
  std::size_t parameter_count() const;
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& w);

  /// Offset of the PGL weights inside parameters(); throws if absent.
  std::size_t pgl_parameter_offset() const;

  /// Normalized single-sample forward pass.
  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  /// Normalized batch forward pass; rows are samples.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x) const;

  /// Physical-units prediction for a single-output network.
  double predict(std::span<const double> physical_input) const;

  std::string to_json() const;
  static Mlp from_json(std::string_view text);
};

/// Normalized regression data; rows are samples.
struct TrainingSet {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd targets;

  std::size_t size() const { return static_cast<std::size_t>(targets.size()); }
};

struct DataPartitions {
  TrainingSet train;
  TrainingSet validation;
  TrainingSet test;
};

/// Residuals eps = target - output and their Jacobian d eps / d w, by batch
/// reverse accumulation. Single-output networks only.
struct ResidualJacobian {
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;  // samples x parameters
};
ResidualJacobian residual_jacobian(const Mlp& net, const TrainingSet& data);

/// Mean squared residual in normalized units.
double normalized_mse(const Mlp& net, const TrainingSet& data);

struct TrainConfig {
  int max_iterations = 200;
  double mu_init = 1e-3;
  double mu_increase = 10.0;
  double mu_decrease = 10.0;
  /// Stop when ||J^T eps||_inf / N falls below this.
  double gradient_tolerance = 1e-7;
  /// Stop when an accepted step lowers the training cost by less than this
  /// fraction of the current cost.
  double cost_tolerance = 1e-10;
  double mu_max = 1e10;
  int restarts = 50;
  std::uint64_t seed = 1;
  /// Parameters projected onto [0, inf) after each accepted step.
  std::vector<std::size_t> nonnegative_parameters;

  void validate() const;
};

enum class StopReason {
  MaxIterations,
  GradientTolerance,
  CostTolerance,
  DampingLimit,
};

std::string_view to_string(StopReason r);

struct TrainReport {
  /// Costs of the retained (best-validation) iterate, physical units.
  double train_mse = 0.0;
  double validation_mse = 0.0;
  double test_mse = 0.0;
  int iterations = 0;
  int accepted_steps = 0;
  /// Training cost (physical units) at the start and after each accepted step.
  std::vector<double> cost_history;
  /// Index into cost_history of the retained iterate.
  std::size_t retained_step = 0;
  std::size_t restart_index = 0;
  StopReason stop = StopReason::MaxIterations;

  std::string to_json() const;
};

/// Damped Gauss-Newton training on data.train. The iterate with the lowest
/// validation cost is written back into `net`.
TrainReport train_lm(Mlp& net, const DataPartitions& data, const TrainConfig& cfg);

/// What a random restart re-draws.
struct InitPolicy {
  /// Leave the PGL weights untouched (they carry physical estimates).
  bool keep_pgl = true;
  /// Leave the output-layer bias untouched.
  bool keep_output_bias = false;
  /// Start with zero weights from the last hidden layer to the output.
  bool zero_output_weights = false;
};

/// Uniform in [-0.5, 0.5] / sqrt(fan_in) for every weight and bias the policy
/// does not keep.
void randomize(Mlp& net, std::mt19937_64& rng, const InitPolicy& policy = {});

/// Generator for restart `index` under master seed `seed`.
std::mt19937_64 restart_rng(std::uint64_t seed, std::size_t index);

struct MultistartResult {
  Mlp best;
  std::size_t best_index = 0;
  std::vector<TrainReport> reports;
};

/// cfg.restarts independent trainings from `templ`; picks the lowest
/// validation cost, then lowest training cost, then lowest index. Result is
/// independent of `jobs`.
MultistartResult multistart(const Mlp& templ, const DataPartitions& data,
                            const TrainConfig& cfg, const InitPolicy& policy = {},
                            int jobs = 1);

}  // namespace pgff
