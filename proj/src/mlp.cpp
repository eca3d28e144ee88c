#include "pgff/mlp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "pgff/error.hpp"

namespace pgff {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using json = nlohmann::json;

namespace {

constexpr double kMuFloor = 1e-20;
constexpr Eigen::Index kBlockRows = 2048;

void activate_inplace(MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::Linear: break;
    case Activation::Relu: z = z.cwiseMax(0.0); break;
    case Activation::Tansig: z = z.unaryExpr([](double v) { return tansig(v); }); break;
  }
}

json scaler_to_json(const AffineScaler& s) {
  if (s.empty()) return nullptr;
  return {{"center", s.center()}, {"half_range", s.half_range()}};
}

AffineScaler scaler_from_json(const json& j) {
  if (j.is_null()) return {};
  return AffineScaler(j.at("center").get<std::vector<double>>(),
                      j.at("half_range").get<std::vector<double>>());
}

double output_scale_sq(const Mlp& net) {
  if (net.output_scaler.empty()) return 1.0;
  const double h = net.output_scaler.half_range()[0];
  return h * h;
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::Relu: return "relu";
    case Activation::Tansig: return "tansig";
  }
  return "?";
}

Activation activation_from_string(std::string_view s) {
  if (s == "linear") return Activation::Linear;
  if (s == "relu") return Activation::Relu;
  if (s == "tansig") return Activation::Tansig;
  throw InvalidArgument("unknown activation '" + std::string(s) + "'");
}

double tansig(double x) { return 2.0 / (1.0 + std::exp(-2.0 * x)) - 1.0; }

Mlp Mlp::make(std::size_t inputs, const std::vector<std::size_t>& hidden,
              Activation hidden_activation, std::size_t outputs) {
  Mlp net;
  std::size_t prev = inputs;
  for (std::size_t h : hidden) {
    net.layers.push_back({MatrixXd::Zero(static_cast<Eigen::Index>(h),
                                         static_cast<Eigen::Index>(prev)),
                          VectorXd::Zero(static_cast<Eigen::Index>(h)), hidden_activation});
    prev = h;
  }
  net.layers.push_back({MatrixXd::Zero(static_cast<Eigen::Index>(outputs),
                                       static_cast<Eigen::Index>(prev)),
                        VectorXd::Zero(static_cast<Eigen::Index>(outputs)),
                        Activation::Linear});
  net.validate();
  return net;
}

std::size_t Mlp::input_size() const { return layers.empty() ? 0 : layers.front().inputs(); }
std::size_t Mlp::output_size() const { return layers.empty() ? 0 : layers.back().outputs(); }

void Mlp::validate() const {
  if (layers.empty()) throw InvalidArgument("network has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    if (L.weights.rows() == 0 || L.weights.cols() == 0) {
      throw InvalidArgument("layer " + std::to_string(l) + " is empty");
    }
    if (L.bias.size() != L.weights.rows()) {
      throw InvalidArgument("layer " + std::to_string(l) + " bias size mismatch");
    }
    if (l > 0 && L.inputs() != layers[l - 1].outputs()) {
      throw InvalidArgument("layer " + std::to_string(l) + " input size mismatch");
    }
  }
  if (layers.back().activation != Activation::Linear) {
    throw InvalidArgument("output layer must be linear");
  }
  if (pgl) {
    if (pgl->weights.rows() != static_cast<Eigen::Index>(output_size()) ||
        pgl->weights.cols() != static_cast<Eigen::Index>(pgl->inputs.size())) {
      throw InvalidArgument("physics-guided branch weight shape mismatch");
    }
    for (auto i : pgl->inputs) {
      if (i >= input_size()) throw InvalidArgument("physics-guided branch input out of range");
    }
  }
  if (!input_scaler.empty() && input_scaler.channels() != input_size()) {
    throw InvalidArgument("input scaler channel count mismatch");
  }
  if (!output_scaler.empty() && output_scaler.channels() != output_size()) {
    throw InvalidArgument("output scaler channel count mismatch");
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& L : layers) n += static_cast<std::size_t>(L.weights.size() + L.bias.size());
  if (pgl) n += static_cast<std::size_t>(pgl->weights.size());
  return n;
}

VectorXd Mlp::parameters() const {
  VectorXd w(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index o = 0;
  for (const auto& L : layers) {
    for (Eigen::Index i = 0; i < L.weights.rows(); ++i)
      for (Eigen::Index j = 0; j < L.weights.cols(); ++j) w[o++] = L.weights(i, j);
    for (Eigen::Index i = 0; i < L.bias.size(); ++i) w[o++] = L.bias[i];
  }
  if (pgl) {
    for (Eigen::Index i = 0; i < pgl->weights.rows(); ++i)
      for (Eigen::Index j = 0; j < pgl->weights.cols(); ++j) w[o++] = pgl->weights(i, j);
  }
  return w;
}

void Mlp::set_parameters(const VectorXd& w) {
  if (static_cast<std::size_t>(w.size()) != parameter_count()) {
    throw InvalidArgument("parameter vector has wrong length");
  }
  Eigen::Index o = 0;
  for (auto& L : layers) {
    for (Eigen::Index i = 0; i < L.weights.rows(); ++i)
      for (Eigen::Index j = 0; j < L.weights.cols(); ++j) L.weights(i, j) = w[o++];
    for (Eigen::Index i = 0; i < L.bias.size(); ++i) L.bias[i] = w[o++];
  }
  if (pgl) {
    for (Eigen::Index i = 0; i < pgl->weights.rows(); ++i)
      for (Eigen::Index j = 0; j < pgl->weights.cols(); ++j) pgl->weights(i, j) = w[o++];
  }
}

std::size_t Mlp::pgl_parameter_offset() const {
  if (!pgl) throw InvalidArgument("network has no physics-guided branch");
  return parameter_count() - static_cast<std::size_t>(pgl->weights.size());
}

VectorXd Mlp::forward(const VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != input_size()) {
    throw InvalidArgument("forward: input has " + std::to_string(x.size()) +
                          " entries, network expects " + std::to_string(input_size()));
  }
  VectorXd a = x;
  for (const auto& L : layers) {
    VectorXd z = L.weights * a + L.bias;
    switch (L.activation) {
      case Activation::Linear: break;
      case Activation::Relu: z = z.cwiseMax(0.0); break;
      case Activation::Tansig: z = z.unaryExpr([](double v) { return tansig(v); }); break;
    }
    a = std::move(z);
  }
  if (pgl) {
    for (std::size_t j = 0; j < pgl->inputs.size(); ++j) {
      a += pgl->weights.col(static_cast<Eigen::Index>(j)) *
           x[static_cast<Eigen::Index>(pgl->inputs[j])];
    }
  }
  return a;
}

MatrixXd Mlp::forward_batch(const MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != input_size()) {
    throw InvalidArgument("forward_batch: input width mismatch");
  }
  MatrixXd a = x;
  for (const auto& L : layers) {
    MatrixXd z = a * L.weights.transpose();
    z.rowwise() += L.bias.transpose();
    activate_inplace(z, L.activation);
    a = std::move(z);
  }
  if (pgl) {
    for (std::size_t j = 0; j < pgl->inputs.size(); ++j) {
      a += x.col(static_cast<Eigen::Index>(pgl->inputs[j])) *
           pgl->weights.col(static_cast<Eigen::Index>(j)).transpose();
    }
  }
  return a;
}

double Mlp::predict(std::span<const double> physical_input) const {
  if (physical_input.size() != input_size()) {
    throw InvalidArgument("predict: input dimension mismatch");
  }
  VectorXd x(static_cast<Eigen::Index>(input_size()));
  for (std::size_t i = 0; i < physical_input.size(); ++i) {
    x[static_cast<Eigen::Index>(i)] = input_scaler.empty()
                                          ? physical_input[i]
                                          : input_scaler.normalize(i, physical_input[i]);
  }
  const double y = forward(x)[0];
  return output_scaler.empty() ? y : output_scaler.denormalize(0, y);
}

std::string Mlp::to_json() const {
  validate();
  json j;
  j["version"] = "pgnnff-model-v1";
  j["kind"] = info.kind;
  j["input_features"] = info.input_features;
  j["sample_time"] = info.sample_time;
  j["layers"] = json::array();
  for (const auto& L : layers) {
    std::vector<double> w;
    for (Eigen::Index i = 0; i < L.weights.rows(); ++i)
      for (Eigen::Index k = 0; k < L.weights.cols(); ++k) w.push_back(L.weights(i, k));
    j["layers"].push_back({{"inputs", L.inputs()},
                           {"outputs", L.outputs()},
                           {"activation", to_string(L.activation)},
                           {"weights", w},
                           {"bias", std::vector<double>(L.bias.data(),
                                                        L.bias.data() + L.bias.size())}});
  }
  if (pgl) {
    std::vector<double> w;
    for (Eigen::Index i = 0; i < pgl->weights.rows(); ++i)
      for (Eigen::Index k = 0; k < pgl->weights.cols(); ++k) w.push_back(pgl->weights(i, k));
    j["pgl"] = {{"inputs", pgl->inputs}, {"transform", "identity"}, {"weights", w}};
  } else {
    j["pgl"] = nullptr;
  }
  j["input_scaler"] = scaler_to_json(input_scaler);
  j["output_scaler"] = scaler_to_json(output_scaler);
  return j.dump(2);
}

Mlp Mlp::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("model JSON parse error: ") + e.what());
  }
  try {
    if (j.at("version") != "pgnnff-model-v1") {
      throw InvalidArgument("unsupported model version " + j.at("version").dump());
    }
    Mlp net;
    net.info.kind = j.value("kind", "");
    net.info.input_features = j.value("input_features", std::vector<std::string>{});
    net.info.sample_time = j.value("sample_time", 0.0);
    for (const auto& jl : j.at("layers")) {
      const auto in = jl.at("inputs").get<Eigen::Index>();
      const auto out = jl.at("outputs").get<Eigen::Index>();
      const auto w = jl.at("weights").get<std::vector<double>>();
      const auto b = jl.at("bias").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != in * out ||
          static_cast<Eigen::Index>(b.size()) != out) {
        throw InvalidArgument("model JSON: layer array sizes inconsistent");
      }
      DenseLayer L;
      L.weights.resize(out, in);
      for (Eigen::Index r = 0; r < out; ++r)
        for (Eigen::Index c = 0; c < in; ++c) L.weights(r, c) = w[static_cast<std::size_t>(r * in + c)];
      L.bias = Eigen::Map<const VectorXd>(b.data(), out);
      L.activation = activation_from_string(jl.at("activation").get<std::string>());
      net.layers.push_back(std::move(L));
    }
    if (!j.at("pgl").is_null()) {
      const auto& jp = j.at("pgl");
      if (jp.value("transform", "identity") != "identity") {
        throw InvalidArgument("model JSON: only the identity PGL transform is supported");
      }
      PhysicsBranch b;
      b.inputs = jp.at("inputs").get<std::vector<std::size_t>>();
      const auto w = jp.at("weights").get<std::vector<double>>();
      const auto cols = static_cast<Eigen::Index>(b.inputs.size());
      if (cols == 0 || static_cast<Eigen::Index>(w.size()) % cols != 0) {
        throw InvalidArgument("model JSON: PGL weight count inconsistent");
      }
      const Eigen::Index rows = static_cast<Eigen::Index>(w.size()) / cols;
      b.weights.resize(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) b.weights(r, c) = w[static_cast<std::size_t>(r * cols + c)];
      net.pgl = std::move(b);
    }
    net.input_scaler = scaler_from_json(j.at("input_scaler"));
    net.output_scaler = scaler_from_json(j.at("output_scaler"));
    net.validate();
    return net;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("model JSON: ") + e.what());
  }
}

namespace {

// Per-layer buffers of a batch forward pass, reused across LM iterations so
// the large matrices are allocated once per training run.
struct BatchCache {
  std::vector<MatrixXd> pre;  // pre-activation of layer l
  std::vector<MatrixXd> act;  // output of layer l
  VectorXd out;
  MatrixXd delta, delta_next;
};

void check_batch(const Mlp& net, const TrainingSet& data, const char* who) {
  if (net.output_size() != 1) throw InvalidArgument(std::string(who) + ": single output only");
  if (data.size() == 0) throw InvalidArgument(std::string(who) + ": empty batch");
  if (data.inputs.rows() != data.targets.size() ||
      static_cast<std::size_t>(data.inputs.cols()) != net.input_size()) {
    throw InvalidArgument(std::string(who) + ": data shape mismatch");
  }
}

void forward_cached(const Mlp& net, const MatrixXd& x, BatchCache& c) {
  const std::size_t nl = net.layers.size();
  c.pre.resize(nl);
  c.act.resize(nl);
  const MatrixXd* in = &x;
  for (std::size_t l = 0; l < nl; ++l) {
    const auto& L = net.layers[l];
    c.pre[l].resize(x.rows(), L.weights.rows());
    c.pre[l].noalias() = *in * L.weights.transpose();
    c.pre[l].rowwise() += L.bias.transpose();
    c.act[l] = c.pre[l];
    activate_inplace(c.act[l], L.activation);
    in = &c.act[l];
  }
  c.out = c.act[nl - 1].col(0);
  if (net.pgl) {
    for (std::size_t j = 0; j < net.pgl->inputs.size(); ++j) {
      c.out += x.col(static_cast<Eigen::Index>(net.pgl->inputs[j])) *
               net.pgl->weights(0, static_cast<Eigen::Index>(j));
    }
  }
}

double cached_mse(const Mlp& net, const TrainingSet& data, BatchCache& c) {
  forward_cached(net, data.inputs, c);
  return (data.targets - c.out).squaredNorm() / static_cast<double>(data.size());
}

// Rows [r0, r0 + nr) of J = d(target - output)/dw, from a cache filled by
// forward_cached() at the same parameters.
void jacobian_block(const Mlp& net, const MatrixXd& x, BatchCache& c, Eigen::Index r0,
                    Eigen::Index nr, MatrixXd& jac) {
  const std::size_t nl = net.layers.size();
  jac.resize(nr, static_cast<Eigen::Index>(net.parameter_count()));

  std::vector<Eigen::Index> offset(nl);
  Eigen::Index o = 0;
  for (std::size_t l = 0; l < nl; ++l) {
    offset[l] = o;
    o += net.layers[l].weights.size() + net.layers[l].bias.size();
  }

  // Reverse accumulation of d(output)/d(pre-activation), one row per sample.
  // The output layer is linear.
  c.delta.setOnes(nr, 1);
  for (std::size_t l = nl; l-- > 0;) {
    const auto& L = net.layers[l];
    const auto in = (l == 0 ? x : c.act[l - 1]).middleRows(r0, nr);
    const Eigen::Index rows = L.weights.rows(), cols = L.weights.cols();
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        jac.col(offset[l] + i * cols + j) = -c.delta.col(i).cwiseProduct(in.col(j));
      }
      jac.col(offset[l] + rows * cols + i) = -c.delta.col(i);
    }
    if (l > 0) {
      c.delta_next.resize(nr, cols);
      c.delta_next.noalias() = c.delta * L.weights;
      switch (net.layers[l - 1].activation) {
        case Activation::Linear: break;
        case Activation::Relu:
          // Subgradient 0 at exactly 0.
          c.delta_next =
              (c.pre[l - 1].middleRows(r0, nr).array() > 0.0).select(c.delta_next, 0.0);
          break;
        case Activation::Tansig:
          c.delta_next.array() *= 1.0 - c.act[l - 1].middleRows(r0, nr).array().square();
          break;
      }
      c.delta.swap(c.delta_next);
    }
  }
  if (net.pgl) {
    for (std::size_t j = 0; j < net.pgl->inputs.size(); ++j) {
      jac.col(o + static_cast<Eigen::Index>(j)) =
          -x.col(static_cast<Eigen::Index>(net.pgl->inputs[j])).segment(r0, nr);
    }
  }
}

}  // namespace

ResidualJacobian residual_jacobian(const Mlp& net, const TrainingSet& data) {
  check_batch(net, data, "residual_jacobian");
  BatchCache c;
  forward_cached(net, data.inputs, c);
  ResidualJacobian rj;
  rj.residual = data.targets - c.out;
  jacobian_block(net, data.inputs, c, 0, data.inputs.rows(), rj.jacobian);
  return rj;
}

double normalized_mse(const Mlp& net, const TrainingSet& data) {
  if (data.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  const VectorXd out = net.forward_batch(data.inputs).col(0);
  return (data.targets - out).squaredNorm() / static_cast<double>(data.size());
}

void TrainConfig::validate() const {
  if (max_iterations < 0) throw InvalidArgument("train: max_iterations must be >= 0");
  if (!(mu_init > 0.0) || !(mu_max > 0.0)) throw InvalidArgument("train: damping must be > 0");
  if (!(mu_increase > 1.0) || !(mu_decrease > 1.0)) {
    throw InvalidArgument("train: damping factors must exceed 1");
  }
  if (!(gradient_tolerance >= 0.0) || !(cost_tolerance >= 0.0)) {
    throw InvalidArgument("train: tolerances must be >= 0");
  }
  if (restarts < 1) throw InvalidArgument("train: restarts must be >= 1");
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::GradientTolerance: return "gradient_tolerance";
    case StopReason::CostTolerance: return "cost_tolerance";
    case StopReason::DampingLimit: return "damping_limit";
  }
  return "?";
}

std::string TrainReport::to_json() const {
  json j = {{"train_mse", train_mse},
            {"validation_mse", validation_mse},
            {"test_mse", test_mse},
            {"iterations", iterations},
            {"accepted_steps", accepted_steps},
            {"cost_history", cost_history},
            {"retained_step", retained_step},
            {"restart_index", restart_index},
            {"stop", to_string(stop)}};
  return j.dump(2);
}

TrainReport train_lm(Mlp& net, const DataPartitions& data, const TrainConfig& cfg) {
  cfg.validate();
  net.validate();
  if (net.output_size() != 1) throw InvalidArgument("train_lm: single output only");
  if (data.train.size() == 0) throw InvalidArgument("train_lm: empty training partition");

  const double scale = output_scale_sq(net);
  const auto p = static_cast<Eigen::Index>(net.parameter_count());
  const double n = static_cast<double>(data.train.size());
  const bool has_val = data.validation.size() > 0;

  Mlp work = net;
  BatchCache cur, trial, scratch;
  auto cost_at = [&](const VectorXd& w, const TrainingSet& set, BatchCache& c) {
    work.set_parameters(w);
    return cached_mse(work, set, c);
  };
  auto project = [&](VectorXd& w) {
    for (auto i : cfg.nonnegative_parameters) {
      if (static_cast<Eigen::Index>(i) < w.size()) w[static_cast<Eigen::Index>(i)] =
          std::max(0.0, w[static_cast<Eigen::Index>(i)]);
    }
  };

  VectorXd w = net.parameters();
  project(w);
  double cost = cost_at(w, data.train, cur);
  if (!std::isfinite(cost)) throw NumericalError("train_lm: initial cost is not finite");

  TrainReport rep;
  rep.cost_history.push_back(cost * scale);
  VectorXd best_w = w;
  double best_val = has_val ? cost_at(w, data.validation, scratch) : cost;
  double best_train = cost;

  double mu = cfg.mu_init;
  rep.stop = StopReason::MaxIterations;
  MatrixXd jac, h(p, p), damped(p, p);
  VectorXd g, resid;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    // `cur` holds the forward pass at w. J^T J and J^T eps are accumulated
    // over row blocks so the full Jacobian is never stored.
    work.set_parameters(w);
    resid = data.train.targets - cur.out;
    h.setZero();
    g.setZero(p);
    const Eigen::Index rows = data.train.inputs.rows();
    for (Eigen::Index r0 = 0; r0 < rows; r0 += kBlockRows) {
      const Eigen::Index nr = std::min(kBlockRows, rows - r0);
      jacobian_block(work, data.train.inputs, cur, r0, nr, jac);
      h.selfadjointView<Eigen::Lower>().rankUpdate(jac.transpose());
      g.noalias() += jac.transpose() * resid.segment(r0, nr);
    }
    if (g.lpNorm<Eigen::Infinity>() / n < cfg.gradient_tolerance) {
      rep.stop = StopReason::GradientTolerance;
      break;
    }
    rep.iterations = it + 1;
    h.triangularView<Eigen::StrictlyUpper>() = h.transpose();

    bool accepted = false;
    bool exhausted = false;
    VectorXd w_new;
    double cost_new = cost;
    while (true) {
      damped = h;
      damped.diagonal().array() += mu;
      Eigen::ColPivHouseholderQR<MatrixXd> qr(damped);
      if (qr.rank() == p) {
        w_new = w + qr.solve(-g);
        project(w_new);
        cost_new = cost_at(w_new, data.train, trial);
        if (std::isfinite(cost_new) && cost_new < cost) {
          accepted = true;
          mu = std::max(mu / cfg.mu_decrease, kMuFloor);
          break;
        }
      }
      mu *= cfg.mu_increase;
      if (mu > cfg.mu_max) {
        exhausted = true;
        break;
      }
    }
    if (!accepted) {
      if (exhausted) rep.stop = StopReason::DampingLimit;
      break;
    }

    const double improvement = cost - cost_new;
    const double previous = cost;
    w = std::move(w_new);
    cost = cost_new;
    std::swap(cur, trial);
    ++rep.accepted_steps;
    rep.cost_history.push_back(cost * scale);

    const double val = has_val ? cost_at(w, data.validation, scratch) : cost;
    if (val < best_val || (val == best_val && cost < best_train)) {
      best_val = val;
      best_train = cost;
      best_w = w;
      rep.retained_step = static_cast<std::size_t>(rep.accepted_steps);
    }
    if (improvement <= cfg.cost_tolerance * previous) {
      rep.stop = StopReason::CostTolerance;
      break;
    }
  }

  net.set_parameters(best_w);
  rep.train_mse = cost_at(best_w, data.train, scratch) * scale;
  rep.validation_mse = has_val ? cost_at(best_w, data.validation, scratch) * scale
                               : std::numeric_limits<double>::quiet_NaN();
  rep.test_mse = data.test.size() > 0 ? cost_at(best_w, data.test, scratch) * scale
                                      : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

std::mt19937_64 restart_rng(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index & 0xffffffffu),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(index) >> 32)};
  return std::mt19937_64(seq);
}

void randomize(Mlp& net, std::mt19937_64& rng, const InitPolicy& policy) {
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto& L = net.layers[l];
    const bool last = l + 1 == net.layers.size();
    const double k = 1.0 / std::sqrt(static_cast<double>(L.inputs()));
    for (Eigen::Index i = 0; i < L.weights.rows(); ++i)
      for (Eigen::Index j = 0; j < L.weights.cols(); ++j) {
        const double v = unit(rng) * k;
        L.weights(i, j) = (last && policy.zero_output_weights) ? 0.0 : v;
      }
    for (Eigen::Index i = 0; i < L.bias.size(); ++i) {
      const double v = unit(rng) * k;
      if (!(last && policy.keep_output_bias)) L.bias[i] = v;
    }
  }
  if (net.pgl && !policy.keep_pgl) {
    const double k = 1.0 / std::sqrt(static_cast<double>(net.pgl->inputs.size()));
    for (Eigen::Index i = 0; i < net.pgl->weights.rows(); ++i)
      for (Eigen::Index j = 0; j < net.pgl->weights.cols(); ++j)
        net.pgl->weights(i, j) = unit(rng) * k;
  }
}

MultistartResult multistart(const Mlp& templ, const DataPartitions& data,
                            const TrainConfig& cfg, const InitPolicy& policy, int jobs) {
  cfg.validate();
  const auto m = static_cast<std::size_t>(cfg.restarts);
  std::vector<Mlp> nets(m);
  std::vector<TrainReport> reports(m);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < m; i = next++) {
      try {
        Mlp net = templ;
        auto rng = restart_rng(cfg.seed, i);
        randomize(net, rng, policy);
        TrainReport rep = train_lm(net, data, cfg);
        rep.restart_index = i;
        nets[i] = std::move(net);
        reports[i] = std::move(rep);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const auto threads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, m);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  // NaN validation costs (no validation data) fall back to training cost.
  auto key = [&](std::size_t i) {
    const double v = std::isnan(reports[i].validation_mse) ? reports[i].train_mse
                                                            : reports[i].validation_mse;
    return std::pair{v, reports[i].train_mse};
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < m; ++i) {
    if (key(i) < key(best)) best = i;
  }
  MultistartResult out;
  out.best = std::move(nets[best]);
  out.best_index = best;
  out.reports = std::move(reports);
  return out;
}

}  // namespace pgff
