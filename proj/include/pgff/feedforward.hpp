#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pgff/mlp.hpp"
#include "pgff/plant.hpp"

namespace pgff {

/// Physical parameters assumed by the model-based controllers.
struct PhysicalEstimates {
  double mass = 19.96;     // kg
  double viscous = 41.22;  // N/(m/s)
  double coulomb = 8.72;   // N

  void validate() const;
  bool operator==(const PhysicalEstimates&) const = default;
};

/// Reference samples around time t. Samples outside the series are clamped to
/// the first / last value (the system is at rest there).
struct ReferenceWindow {
  double next = 0.0;   // r(t+1)
  double cur = 0.0;    // r(t)
  double prev = 0.0;   // r(t-1)
  double prev2 = 0.0;  // r(t-2)
  double ts = 1e-4;

  static ReferenceWindow at(std::span<const double> r, std::size_t k, double ts);

  double velocity() const { return (next - prev) / (2.0 * ts); }
  double velocity_prev() const { return (cur - prev2) / (2.0 * ts); }
  /// (2/Ts^2)(r(t+1) - 2 r(t) + r(t-1))
  double accel() const { return 2.0 * (next - 2.0 * cur + prev) / (ts * ts); }
};

enum class FeatureTag {
  RNext,
  R,
  RPrev,
  RPrev2,
  UPrev,
  Vel,
  VelPrev,
  SignVel,
  SignVelPrev,
  Accel,
};

std::string_view to_string(FeatureTag tag);

using InputSpec = std::vector<FeatureTag>;

/// r(t+1), r(t), r(t-1), r(t-2), u(t-1)
InputSpec nnarx_spec();
/// r''(t), u(t-1), r(t), r(t-1), r'(t), r'(t-1), sign r'(t), sign r'(t-1)
InputSpec pgnn_spec();

/// Positions inside pgnn_spec() of the linear-branch features
/// u(t-1), r''(t), r'(t), r'(t-1), sign r'(t), sign r'(t-1).
std::vector<std::size_t> pgl_feature_indices();

/// Throws InvalidArgument on repeated tags or an empty spec.
void validate_spec(const InputSpec& spec);

std::vector<double> assemble_features(const InputSpec& spec, const ReferenceWindow& w,
                                      double u_prev);

enum class ModelKind { Nnarx, Pgnn1, Pgnn2 };

std::string_view to_string(ModelKind k);
ModelKind model_kind_from_string(std::string_view s);
InputSpec input_spec(ModelKind k);

/// Sample-by-sample feedforward generator. Holds u(t-1), which starts at 0.
class FeedforwardController {
 public:
  virtual ~FeedforwardController() = default;

  virtual std::string kind() const = 0;
  virtual std::unique_ptr<FeedforwardController> clone() const = 0;

  /// Output for window `w` given the previous output; does not touch state.
  virtual double predict(const ReferenceWindow& w, double u_prev) const = 0;

  double step(const ReferenceWindow& w) {
    u_prev_ = predict(w, u_prev_);
    return u_prev_;
  }
  void reset() { u_prev_ = 0.0; }

  double previous_output() const { return u_prev_; }
  void set_previous_output(double u) { u_prev_ = u; }

  /// Resets, then streams over the whole reference.
  std::vector<double> run(std::span<const double> r, double ts);

 private:
  double u_prev_ = 0.0;
};

std::unique_ptr<FeedforwardController> ff_none();
std::unique_ptr<FeedforwardController> ff_mass_acc(const PhysicalEstimates& est);
std::unique_ptr<FeedforwardController> ff_friction_comp(const PhysicalEstimates& est);
std::unique_ptr<FeedforwardController> ff_nnarx(Mlp net);
std::unique_ptr<FeedforwardController> ff_pgnn1(Mlp net);
/// Requires a network with a linear branch over pgl_feature_indices().
std::unique_ptr<FeedforwardController> ff_pgnn2(Mlp net);
/// Dispatches on the model kind recorded in net.info.kind.
std::unique_ptr<FeedforwardController> ff_from_model(Mlp net);
/// Inverse of the true plant, friction and ripple included.
std::unique_ptr<FeedforwardController> ideal_ff(const PlantParams& plant);

/// Linear-branch weights in physical units, in pgl_feature_indices() order:
/// {uprev_coefficient, m, f_v, f_v, f_c, f_c}.
std::vector<double> pgl_physical_weights(const PhysicalEstimates& est,
                                         double uprev_coefficient = -1.0);

struct PglInit {
  Eigen::RowVectorXd weights;  // normalized
  double bias = 0.0;           // added to the output bias
};

/// Maps the physical linear model u = sum w_i x_i into normalized
/// coordinates: w~_i = w_i s_i / s_u, bias = (sum w_i c_i - c_u) / s_u.
/// Throws InvalidArgument when a scaler is empty or sizes disagree.
PglInit pgl_init_weights(const std::vector<double>& physical_weights,
                         const std::vector<std::size_t>& feature_indices,
                         const AffineScaler& input_scaler, const AffineScaler& output_scaler);

/// Untrained network for `kind`, carrying the given scalers. For Pgnn2 the
/// linear branch and output bias come from the physical estimates and the
/// hidden-to-output weights are zero.
Mlp make_model(ModelKind kind, std::size_t neurons, Activation activation,
               const AffineScaler& input_scaler, const AffineScaler& output_scaler,
               const PhysicalEstimates& est = {}, double uprev_coefficient = -1.0);

}  // namespace pgff
