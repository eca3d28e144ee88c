#include "pgff/feedforward.hpp"

#include <algorithm>
#include <cmath>

#include "pgff/error.hpp"
#include "pgff/signals.hpp"

namespace pgff {

void PhysicalEstimates::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw InvalidArgument("estimates: mass must be > 0");
  if (!std::isfinite(viscous) || !std::isfinite(coulomb)) {
    throw InvalidArgument("estimates: friction coefficients must be finite");
  }
}

ReferenceWindow ReferenceWindow::at(std::span<const double> r, std::size_t k, double ts) {
  if (r.empty() || k >= r.size()) throw InvalidArgument("reference window index out of range");
  const std::size_t last = r.size() - 1;
  auto tap = [&](std::ptrdiff_t i) {
    if (i < 0) return r.front();
    if (static_cast<std::size_t>(i) > last) return r.back();
    return r[static_cast<std::size_t>(i)];
  };
  const auto ki = static_cast<std::ptrdiff_t>(k);
  return {tap(ki + 1), tap(ki), tap(ki - 1), tap(ki - 2), ts};
}

std::string_view to_string(FeatureTag tag) {
  switch (tag) {
    case FeatureTag::RNext: return "r(t+1)";
    case FeatureTag::R: return "r(t)";
    case FeatureTag::RPrev: return "r(t-1)";
    case FeatureTag::RPrev2: return "r(t-2)";
    case FeatureTag::UPrev: return "u(t-1)";
    case FeatureTag::Vel: return "dr(t)";
    case FeatureTag::VelPrev: return "dr(t-1)";
    case FeatureTag::SignVel: return "sign dr(t)";
    case FeatureTag::SignVelPrev: return "sign dr(t-1)";
    case FeatureTag::Accel: return "ddr(t)";
  }
  return "?";
}

InputSpec nnarx_spec() {
  return {FeatureTag::RNext, FeatureTag::R, FeatureTag::RPrev, FeatureTag::RPrev2,
          FeatureTag::UPrev};
}

InputSpec pgnn_spec() {
  return {FeatureTag::Accel, FeatureTag::UPrev,   FeatureTag::R,       FeatureTag::RPrev,
          FeatureTag::Vel,   FeatureTag::VelPrev, FeatureTag::SignVel, FeatureTag::SignVelPrev};
}

std::vector<std::size_t> pgl_feature_indices() { return {1, 0, 4, 5, 6, 7}; }

void validate_spec(const InputSpec& spec) {
  if (spec.empty()) throw InvalidArgument("input spec is empty");
  for (std::size_t i = 0; i < spec.size(); ++i)
    for (std::size_t j = i + 1; j < spec.size(); ++j)
      if (spec[i] == spec[j]) {
        throw InvalidArgument("input spec repeats " + std::string(to_string(spec[i])));
      }
}

std::vector<double> assemble_features(const InputSpec& spec, const ReferenceWindow& w,
                                      double u_prev) {
  std::vector<double> x;
  x.reserve(spec.size());
  for (FeatureTag tag : spec) {
    switch (tag) {
      case FeatureTag::RNext: x.push_back(w.next); break;
      case FeatureTag::R: x.push_back(w.cur); break;
      case FeatureTag::RPrev: x.push_back(w.prev); break;
      case FeatureTag::RPrev2: x.push_back(w.prev2); break;
      case FeatureTag::UPrev: x.push_back(u_prev); break;
      case FeatureTag::Vel: x.push_back(w.velocity()); break;
      case FeatureTag::VelPrev: x.push_back(w.velocity_prev()); break;
      case FeatureTag::SignVel: x.push_back(sign0(w.velocity())); break;
      case FeatureTag::SignVelPrev: x.push_back(sign0(w.velocity_prev())); break;
      case FeatureTag::Accel: x.push_back(w.accel()); break;
    }
  }
  return x;
}

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Nnarx: return "nnarx";
    case ModelKind::Pgnn1: return "pgnn1";
    case ModelKind::Pgnn2: return "pgnn2";
  }
  return "?";
}

ModelKind model_kind_from_string(std::string_view s) {
  if (s == "nnarx") return ModelKind::Nnarx;
  if (s == "pgnn1") return ModelKind::Pgnn1;
  if (s == "pgnn2") return ModelKind::Pgnn2;
  throw InvalidArgument("unknown model kind '" + std::string(s) + "'");
}

InputSpec input_spec(ModelKind k) { return k == ModelKind::Nnarx ? nnarx_spec() : pgnn_spec(); }

std::vector<double> FeedforwardController::run(std::span<const double> r, double ts) {
  reset();
  std::vector<double> u(r.size());
  for (std::size_t k = 0; k < r.size(); ++k) u[k] = step(ReferenceWindow::at(r, k, ts));
  return u;
}

namespace {

class NoFeedforward final : public FeedforwardController {
 public:
  std::string kind() const override { return "none"; }
  std::unique_ptr<FeedforwardController> clone() const override {
    return std::make_unique<NoFeedforward>(*this);
  }
  double predict(const ReferenceWindow&, double) const override { return 0.0; }
};

class MassAcceleration final : public FeedforwardController {
 public:
  explicit MassAcceleration(const PhysicalEstimates& est) : est_(est) { est_.validate(); }
  std::string kind() const override { return "mass_acc"; }
  std::unique_ptr<FeedforwardController> clone() const override {
    return std::make_unique<MassAcceleration>(*this);
  }
  double predict(const ReferenceWindow& w, double u_prev) const override {
    return -u_prev + est_.mass * w.accel();
  }

 private:
  PhysicalEstimates est_;
};

class FrictionCompensator final : public FeedforwardController {
 public:
  explicit FrictionCompensator(const PhysicalEstimates& est) : est_(est) { est_.validate(); }
  std::string kind() const override { return "friction_comp"; }
  std::unique_ptr<FeedforwardController> clone() const override {
    return std::make_unique<FrictionCompensator>(*this);
  }
  double predict(const ReferenceWindow& w, double u_prev) const override {
    const double v = w.velocity(), v1 = w.velocity_prev();
    return -u_prev + est_.mass * w.accel() + est_.viscous * (v + v1) +
           est_.coulomb * (sign0(v) + sign0(v1));
  }

 private:
  PhysicalEstimates est_;
};

class IdealFeedforward final : public FeedforwardController {
 public:
  explicit IdealFeedforward(const PlantParams& p) : plant_(p) { plant_.validate(); }
  std::string kind() const override { return "ideal"; }
  std::unique_ptr<FeedforwardController> clone() const override {
    return std::make_unique<IdealFeedforward>(*this);
  }
  double predict(const ReferenceWindow& w, double u_prev) const override {
    return -u_prev + plant_.mass * w.accel() +
           parasitic_force(w.cur, w.velocity(), plant_) +
           parasitic_force(w.prev, w.velocity_prev(), plant_);
  }

 private:
  PlantParams plant_;
};

class NeuralFeedforward final : public FeedforwardController {
 public:
  NeuralFeedforward(Mlp net, ModelKind kind) : net_(std::move(net)), kind_(kind), spec_(input_spec(kind)) {
    net_.validate();
    if (net_.input_size() != spec_.size()) {
      throw InvalidArgument(std::string(to_string(kind)) + " controller needs " +
                            std::to_string(spec_.size()) + " inputs, network has " +
                            std::to_string(net_.input_size()));
    }
    if (net_.output_size() != 1) throw InvalidArgument("feedforward network must have one output");
    if (kind == ModelKind::Pgnn2) {
      if (!net_.pgl || net_.pgl->inputs != pgl_feature_indices()) {
        throw InvalidArgument("pgnn2 controller needs a linear branch over the physical features");
      }
    }
  }
  std::string kind() const override { return std::string(to_string(kind_)); }
  std::unique_ptr<FeedforwardController> clone() const override {
    return std::make_unique<NeuralFeedforward>(*this);
  }
  double predict(const ReferenceWindow& w, double u_prev) const override {
    return net_.predict(assemble_features(spec_, w, u_prev));
  }

 private:
  Mlp net_;
  ModelKind kind_;
  InputSpec spec_;
};

}  // namespace

std::unique_ptr<FeedforwardController> ff_none() { return std::make_unique<NoFeedforward>(); }

std::unique_ptr<FeedforwardController> ff_mass_acc(const PhysicalEstimates& est) {
  return std::make_unique<MassAcceleration>(est);
}

std::unique_ptr<FeedforwardController> ff_friction_comp(const PhysicalEstimates& est) {
  return std::make_unique<FrictionCompensator>(est);
}

std::unique_ptr<FeedforwardController> ff_nnarx(Mlp net) {
  return std::make_unique<NeuralFeedforward>(std::move(net), ModelKind::Nnarx);
}

std::unique_ptr<FeedforwardController> ff_pgnn1(Mlp net) {
  return std::make_unique<NeuralFeedforward>(std::move(net), ModelKind::Pgnn1);
}

std::unique_ptr<FeedforwardController> ff_pgnn2(Mlp net) {
  return std::make_unique<NeuralFeedforward>(std::move(net), ModelKind::Pgnn2);
}

std::unique_ptr<FeedforwardController> ff_from_model(Mlp net) {
  const ModelKind kind = model_kind_from_string(net.info.kind);
  return std::make_unique<NeuralFeedforward>(std::move(net), kind);
}

std::unique_ptr<FeedforwardController> ideal_ff(const PlantParams& plant) {
  return std::make_unique<IdealFeedforward>(plant);
}

std::vector<double> pgl_physical_weights(const PhysicalEstimates& est, double uprev_coefficient) {
  return {uprev_coefficient, est.mass, est.viscous, est.viscous, est.coulomb, est.coulomb};
}

PglInit pgl_init_weights(const std::vector<double>& physical_weights,
                         const std::vector<std::size_t>& feature_indices,
                         const AffineScaler& input_scaler, const AffineScaler& output_scaler) {
  if (input_scaler.empty() || output_scaler.empty()) {
    throw InvalidArgument("pgl_init_weights: scalers must be fitted first");
  }
  if (physical_weights.size() != feature_indices.size()) {
    throw InvalidArgument("pgl_init_weights: one weight per feature required");
  }
  const double cu = output_scaler.center()[0];
  const double su = output_scaler.half_range()[0];
  PglInit out;
  out.weights.resize(static_cast<Eigen::Index>(physical_weights.size()));
  double offset = 0.0;
  for (std::size_t i = 0; i < physical_weights.size(); ++i) {
    const std::size_t f = feature_indices[i];
    if (f >= input_scaler.channels()) throw InvalidArgument("pgl_init_weights: feature out of range");
    const double w = physical_weights[i];
    out.weights[static_cast<Eigen::Index>(i)] = w * input_scaler.half_range()[f] / su;
    offset += w * input_scaler.center()[f];
  }
  out.bias = (offset - cu) / su;
  return out;
}

Mlp make_model(ModelKind kind, std::size_t neurons, Activation activation,
               const AffineScaler& input_scaler, const AffineScaler& output_scaler,
               const PhysicalEstimates& est, double uprev_coefficient) {
  if (neurons == 0) throw InvalidArgument("make_model: at least one hidden neuron required");
  const InputSpec spec = input_spec(kind);
  Mlp net = Mlp::make(spec.size(), {neurons}, activation);
  net.input_scaler = input_scaler;
  net.output_scaler = output_scaler;
  net.info.kind = std::string(to_string(kind));
  for (FeatureTag t : spec) net.info.input_features.emplace_back(to_string(t));
  if (kind == ModelKind::Pgnn2) {
    est.validate();
    const auto idx = pgl_feature_indices();
    const PglInit init =
        pgl_init_weights(pgl_physical_weights(est, uprev_coefficient), idx, input_scaler, output_scaler);
    net.pgl = PhysicsBranch{idx, init.weights};
    net.layers.back().bias[0] = init.bias;
  }
  net.validate();
  return net;
}

}  // namespace pgff
