#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "pgff/error.hpp"
#include "pgff/mlp.hpp"

using namespace pgff;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double s = 1.0) {
  std::uniform_real_distribution<double> d(-s, s);
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = d(rng);
  return m;
}

Mlp random_net(std::size_t in, std::size_t hidden, Activation act, std::mt19937_64& rng,
               bool with_pgl = false) {
  Mlp net = Mlp::make(in, {hidden}, act);
  if (with_pgl) net.pgl = PhysicsBranch{{0, 2, 3}, MatrixXd::Zero(1, 3)};
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  VectorXd w(static_cast<Eigen::Index>(net.parameter_count()));
  for (auto& x : w) x = d(rng);
  net.set_parameters(w);
  return net;
}

// Straight-line forward pass, written without Eigen expressions.
double naive_forward(const Mlp& net, const VectorXd& x) {
  std::vector<double> a(x.data(), x.data() + x.size());
  for (const auto& L : net.layers) {
    std::vector<double> z(L.outputs());
    for (std::size_t i = 0; i < L.outputs(); ++i) {
      double s = L.bias[static_cast<Eigen::Index>(i)];
      for (std::size_t j = 0; j < L.inputs(); ++j)
        s += L.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * a[j];
      if (L.activation == Activation::Relu) s = s > 0.0 ? s : 0.0;
      if (L.activation == Activation::Tansig) s = 2.0 / (1.0 + std::exp(-2.0 * s)) - 1.0;
      z[i] = s;
    }
    a = z;
  }
  double out = a[0];
  if (net.pgl) {
    for (std::size_t j = 0; j < net.pgl->inputs.size(); ++j)
      out += net.pgl->weights(0, static_cast<Eigen::Index>(j)) * x[static_cast<Eigen::Index>(net.pgl->inputs[j])];
  }
  return out;
}

double max_fd_error(const Mlp& net, const TrainingSet& data, double h) {
  const ResidualJacobian rj = residual_jacobian(net, data);
  Mlp probe = net;
  const VectorXd w = net.parameters();
  double worst = 0.0;
  for (Eigen::Index p = 0; p < w.size(); ++p) {
    VectorXd wp = w, wm = w;
    wp[p] += h;
    wm[p] -= h;
    probe.set_parameters(wp);
    const VectorXd ep = data.targets - probe.forward_batch(data.inputs).col(0);
    probe.set_parameters(wm);
    const VectorXd em = data.targets - probe.forward_batch(data.inputs).col(0);
    const VectorXd fd = (ep - em) / (2 * h);
    for (Eigen::Index i = 0; i < fd.size(); ++i) {
      const double a = rj.jacobian(i, p), b = fd[i];
      worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
    }
  }
  return worst;
}

TrainingSet linear_data(const VectorXd& theta, double bias, Eigen::Index n, std::mt19937_64& rng,
                        double noise = 0.0) {
  TrainingSet s;
  s.inputs = random_matrix(n, theta.size(), rng);
  std::normal_distribution<double> e(0.0, noise > 0 ? noise : 1.0);
  s.targets = s.inputs * theta + VectorXd::Constant(n, bias);
  if (noise > 0)
    for (auto& t : s.targets) t += e(rng);
  return s;
}

}  // namespace

TEST_CASE("activations") {
  CHECK(tansig(0.0) == 0.0);
  CHECK(tansig(1.0) == doctest::Approx(std::tanh(1.0)).epsilon(1e-14).scale(0));
  CHECK(tansig(-3.0) == doctest::Approx(std::tanh(-3.0)).epsilon(1e-14).scale(0));
  for (Activation a : {Activation::Linear, Activation::Relu, Activation::Tansig})
    CHECK(activation_from_string(to_string(a)) == a);
  CHECK_THROWS_AS(activation_from_string("sigmoid"), InvalidArgument);
}

TEST_CASE("zero network outputs zero") {
  const Mlp net = Mlp::make(5, {4}, Activation::Tansig);
  std::mt19937_64 rng(1);
  const MatrixXd x = random_matrix(10, 5, rng);
  CHECK(net.forward_batch(x).cwiseAbs().maxCoeff() == 0.0);

  Mlp one = Mlp::make(1, {1}, Activation::Tansig);
  one.layers[0].weights(0, 0) = 1.0;
  one.layers[1].weights(0, 0) = 1.0;
  CHECK(one.forward(VectorXd::Zero(1))[0] == 0.0);
}

TEST_CASE("forward pass matches a naive re-implementation") {
  std::mt19937_64 rng(7);
  for (Activation act : {Activation::Relu, Activation::Tansig}) {
    const Mlp net = random_net(8, 4, act, rng);
    const MatrixXd x = random_matrix(20, 8, rng, 2.0);
    const MatrixXd batch = net.forward_batch(x);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const VectorXd xi = x.row(i).transpose();
      const double ref = naive_forward(net, xi);
      CHECK(std::abs(net.forward(xi)[0] - ref) < 1e-12);
      CHECK(std::abs(batch(i, 0) - ref) < 1e-12);
    }
  }
}

TEST_CASE("linear branch adds to the output") {
  std::mt19937_64 rng(8);
  Mlp net = random_net(5, 3, Activation::Tansig, rng, true);
  net.pgl->weights << 0.5, -1.0, 2.0;
  const VectorXd x = random_matrix(5, 1, rng).col(0);
  CHECK(std::abs(net.forward(x)[0] - naive_forward(net, x)) < 1e-12);

  // No branch and zero hidden-to-output weights leaves the output bias.
  Mlp bare = net;
  bare.pgl.reset();
  bare.layers.back().weights.setZero();
  bare.layers.back().bias[0] = 0.37;
  CHECK(bare.forward(x)[0] == 0.37);
}

TEST_CASE("parameter vector round trip") {
  std::mt19937_64 rng(9);
  Mlp net = random_net(6, 2, Activation::Relu, rng, true);
  CHECK(net.parameter_count() == 6 * 2 + 2 + 2 + 1 + 3);
  CHECK(net.pgl_parameter_offset() == net.parameter_count() - 3);
  const VectorXd w = net.parameters();
  Mlp other = Mlp::make(6, {2}, Activation::Relu);
  other.pgl = PhysicsBranch{{0, 2, 3}, MatrixXd::Zero(1, 3)};
  other.set_parameters(w);
  CHECK(other.parameters() == w);
  CHECK(net.layers[0].weights(0, 1) == w[1]);
  CHECK_THROWS_AS(other.set_parameters(VectorXd::Zero(3)), InvalidArgument);
  CHECK_THROWS_AS(Mlp::make(3, {2}, Activation::Relu).pgl_parameter_offset(), InvalidArgument);
}

TEST_CASE("dimension errors") {
  const Mlp net = Mlp::make(3, {2}, Activation::Relu);
  CHECK_THROWS_AS(net.forward(VectorXd::Zero(4)), InvalidArgument);
  CHECK_THROWS_AS(net.forward_batch(MatrixXd::Zero(2, 2)), InvalidArgument);
  Mlp bad = net;
  bad.layers[1].activation = Activation::Relu;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = net;
  bad.pgl = PhysicsBranch{{7}, MatrixXd::Zero(1, 1)};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("zero residual for a zero net on zero targets") {
  const Mlp net = Mlp::make(4, {3}, Activation::Tansig);
  TrainingSet s{MatrixXd::Zero(5, 4), VectorXd::Zero(5)};
  CHECK(residual_jacobian(net, s).residual.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tansig jacobian matches central differences") {
  for (unsigned seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    const Mlp net = random_net(6, 2, Activation::Tansig, rng, seed % 2 == 0);
    TrainingSet s{random_matrix(16, 6, rng), random_matrix(16, 1, rng).col(0)};
    CHECK(max_fd_error(net, s, 1e-6) < 1e-6);
  }
}

TEST_CASE("relu jacobian matches central differences away from kinks") {
  std::mt19937_64 rng(11);
  const Mlp net = random_net(6, 4, Activation::Relu, rng, true);
  TrainingSet s{random_matrix(64, 6, rng), random_matrix(64, 1, rng).col(0)};
  const MatrixXd pre = (s.inputs * net.layers[0].weights.transpose()).rowwise() +
                       net.layers[0].bias.transpose();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < pre.rows(); ++i)
    if (pre.row(i).cwiseAbs().minCoeff() > 1e-3) keep.push_back(i);
  REQUIRE(keep.size() >= 16);
  TrainingSet safe{MatrixXd(16, 6), VectorXd(16)};
  for (Eigen::Index i = 0; i < 16; ++i) {
    safe.inputs.row(i) = s.inputs.row(keep[static_cast<std::size_t>(i)]);
    safe.targets[i] = s.targets[keep[static_cast<std::size_t>(i)]];
  }
  CHECK(max_fd_error(net, safe, 1e-6) < 1e-6);
}

TEST_CASE("relu network is piecewise linear along a line") {
  std::mt19937_64 rng(12);
  const Mlp net = random_net(5, 6, Activation::Relu, rng);
  for (int trial = 0; trial < 5; ++trial) {
    const VectorXd x = random_matrix(5, 1, rng).col(0);
    const VectorXd d = random_matrix(5, 1, rng).col(0);
    // Breakpoints: where a hidden pre-activation crosses zero.
    std::vector<double> cuts{0.0, 1.0};
    const VectorXd a = net.layers[0].weights * x + net.layers[0].bias;
    const VectorXd b = net.layers[0].weights * d;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (b[i] == 0.0) continue;
      const double t = -a[i] / b[i];
      if (t > 0.0 && t < 1.0) cuts.push_back(t);
    }
    std::sort(cuts.begin(), cuts.end());
    auto f = [&](double t) { return net.forward(x + t * d)[0]; };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double lo = cuts[i], hi = cuts[i + 1];
      if (hi - lo < 1e-6) continue;
      const double t0 = lo + 0.1 * (hi - lo), t1 = lo + 0.5 * (hi - lo), t2 = lo + 0.9 * (hi - lo);
      const double slope01 = (f(t1) - f(t0)) / (t1 - t0);
      const double slope12 = (f(t2) - f(t1)) / (t2 - t1);
      CHECK(std::abs(slope01 - slope12) < 1e-8 * std::max(1.0, std::abs(slope01)));
    }
    // Continuity at each breakpoint.
    for (std::size_t i = 1; i + 1 < cuts.size(); ++i)
      CHECK(std::abs(f(cuts[i] - 1e-9) - f(cuts[i] + 1e-9)) < 1e-6);
  }
}

TEST_CASE("lm recovers the least-squares solution of a linear model") {
  std::mt19937_64 rng(21);
  VectorXd theta(4);
  theta << 0.8, -1.3, 0.25, 2.0;
  DataPartitions d;
  d.train = linear_data(theta, 0.4, 400, rng, 0.05);

  MatrixXd a(400, 5);
  a << d.train.inputs, VectorXd::Ones(400);
  const VectorXd ls = (a.transpose() * a).ldlt().solve(a.transpose() * d.train.targets);

  Mlp net = Mlp::make(4, {}, Activation::Linear);
  TrainConfig cfg;
  const TrainReport rep = train_lm(net, d, cfg);
  const VectorXd w = net.parameters();
  CHECK((w - ls).norm() / ls.norm() < 1e-8);
  CHECK(rep.accepted_steps <= 3);
  CHECK(rep.accepted_steps >= 1);
  for (std::size_t i = 1; i < rep.cost_history.size(); ++i)
    CHECK(rep.cost_history[i] <= rep.cost_history[i - 1]);
}

TEST_CASE("lm stops at once from the optimum") {
  std::mt19937_64 rng(22);
  VectorXd theta(3);
  theta << 1.0, 2.0, -0.5;
  DataPartitions d;
  d.train = linear_data(theta, 0.0, 100, rng);
  Mlp net = Mlp::make(3, {}, Activation::Linear);
  VectorXd w(4);
  w << theta, 0.0;
  net.set_parameters(w);
  const TrainReport rep = train_lm(net, d, TrainConfig{});
  CHECK(rep.accepted_steps == 0);
  CHECK(rep.stop == StopReason::GradientTolerance);
  CHECK(net.parameters() == w);
  CHECK(std::isnan(rep.validation_mse));
}

TEST_CASE("lm fits a realizable tansig target") {
  std::mt19937_64 rng(23);
  Mlp truth = Mlp::make(1, {2}, Activation::Tansig);
  VectorXd wt(truth.parameter_count());
  wt << 1.5, -0.7, 0.2, 0.4, 0.8, -1.1, 0.05;
  truth.set_parameters(wt);
  DataPartitions d;
  d.train.inputs = random_matrix(200, 1, rng);
  d.train.targets = truth.forward_batch(d.train.inputs).col(0);
  d.validation.inputs = random_matrix(40, 1, rng);
  d.validation.targets = truth.forward_batch(d.validation.inputs).col(0);

  TrainConfig cfg;
  cfg.max_iterations = 500;
  cfg.cost_tolerance = 0.0;
  cfg.gradient_tolerance = 0.0;
  cfg.restarts = 8;
  const MultistartResult r = multistart(Mlp::make(1, {2}, Activation::Tansig), d, cfg);
  CHECK(r.reports[r.best_index].train_mse < 1e-10);
}

TEST_CASE("accepted steps never raise the training cost") {
  std::mt19937_64 rng(24);
  const Mlp target = random_net(3, 3, Activation::Tansig, rng);
  DataPartitions d;
  d.train.inputs = random_matrix(300, 3, rng);
  d.train.targets = target.forward_batch(d.train.inputs).col(0) + 0.01 * random_matrix(300, 1, rng).col(0);
  d.validation.inputs = random_matrix(60, 3, rng);
  d.validation.targets = target.forward_batch(d.validation.inputs).col(0);
  d.test = d.validation;
  TrainConfig cfg;
  cfg.restarts = 4;
  for (Activation act : {Activation::Relu, Activation::Tansig}) {
    const MultistartResult r = multistart(Mlp::make(3, {4}, act), d, cfg);
    for (const auto& rep : r.reports) {
      CHECK(rep.cost_history.size() == static_cast<std::size_t>(rep.accepted_steps) + 1);
      for (std::size_t i = 1; i < rep.cost_history.size(); ++i)
        CHECK(rep.cost_history[i] <= rep.cost_history[i - 1]);
      CHECK(rep.retained_step < rep.cost_history.size());
    }
  }
}

TEST_CASE("retained iterate has the lowest validation cost among accepted steps") {
  std::mt19937_64 rng(25);
  const Mlp target = random_net(2, 4, Activation::Tansig, rng);
  DataPartitions d;
  d.train.inputs = random_matrix(40, 2, rng);
  d.train.targets = target.forward_batch(d.train.inputs).col(0) + 0.3 * random_matrix(40, 1, rng).col(0);
  d.validation.inputs = random_matrix(200, 2, rng);
  d.validation.targets = target.forward_batch(d.validation.inputs).col(0);

  Mlp net = Mlp::make(2, {6}, Activation::Tansig);
  auto init = restart_rng(3, 0);
  randomize(net, init);
  const Mlp start = net;
  TrainConfig cfg;
  cfg.max_iterations = 60;
  const TrainReport rep = train_lm(net, d, cfg);
  CHECK(rep.validation_mse <= normalized_mse(start, d.validation) + 1e-15);
  CHECK(rep.validation_mse == doctest::Approx(normalized_mse(net, d.validation)).scale(0));
}

TEST_CASE("nonnegative projection") {
  std::mt19937_64 rng(26);
  VectorXd theta(2);
  theta << -2.0, 1.0;
  DataPartitions d;
  d.train = linear_data(theta, 0.0, 100, rng);
  Mlp net = Mlp::make(2, {}, Activation::Linear);
  TrainConfig cfg;
  cfg.nonnegative_parameters = {0};
  train_lm(net, d, cfg);
  CHECK(net.parameters()[0] >= 0.0);
}

TEST_CASE("randomize respects the policy") {
  Mlp net = Mlp::make(4, {3}, Activation::Relu);
  net.pgl = PhysicsBranch{{0, 1}, MatrixXd::Constant(1, 2, 5.0)};
  net.layers.back().bias[0] = 0.9;
  auto rng = restart_rng(1, 0);
  InitPolicy p;
  p.keep_output_bias = true;
  p.zero_output_weights = true;
  randomize(net, rng, p);
  CHECK(net.pgl->weights(0, 0) == 5.0);
  CHECK(net.layers.back().bias[0] == 0.9);
  CHECK(net.layers.back().weights.cwiseAbs().maxCoeff() == 0.0);
  CHECK(net.layers[0].weights.cwiseAbs().maxCoeff() > 0.0);
  CHECK(net.layers[0].weights.cwiseAbs().maxCoeff() <= 0.5 / std::sqrt(4.0));
}

TEST_CASE("restart generators are distinct and repeatable") {
  auto a = restart_rng(1, 0), b = restart_rng(1, 0), c = restart_rng(1, 1), d = restart_rng(2, 0);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
}

TEST_CASE("multistart with one restart equals one training run") {
  std::mt19937_64 rng(31);
  const Mlp target = random_net(3, 2, Activation::Tansig, rng);
  DataPartitions d;
  d.train.inputs = random_matrix(100, 3, rng);
  d.train.targets = target.forward_batch(d.train.inputs).col(0);
  d.validation.inputs = random_matrix(30, 3, rng);
  d.validation.targets = target.forward_batch(d.validation.inputs).col(0);
  TrainConfig cfg;
  cfg.restarts = 1;
  cfg.seed = 17;
  const Mlp templ = Mlp::make(3, {2}, Activation::Tansig);
  const MultistartResult r = multistart(templ, d, cfg);

  Mlp solo = templ;
  auto g = restart_rng(17, 0);
  randomize(solo, g);
  train_lm(solo, d, cfg);
  CHECK(r.best.parameters() == solo.parameters());
}

TEST_CASE("multistart is deterministic and independent of the worker count") {
  std::mt19937_64 rng(32);
  const Mlp target = random_net(3, 2, Activation::Relu, rng);
  DataPartitions d;
  d.train.inputs = random_matrix(150, 3, rng);
  d.train.targets = target.forward_batch(d.train.inputs).col(0);
  d.validation.inputs = random_matrix(40, 3, rng);
  d.validation.targets = target.forward_batch(d.validation.inputs).col(0);
  TrainConfig cfg;
  cfg.restarts = 6;
  const Mlp templ = Mlp::make(3, {3}, Activation::Relu);
  const auto a = multistart(templ, d, cfg, {}, 1);
  const auto b = multistart(templ, d, cfg, {}, 1);
  const auto c = multistart(templ, d, cfg, {}, 3);
  CHECK(a.best.parameters() == b.best.parameters());
  CHECK(a.best.parameters() == c.best.parameters());
  CHECK(a.best_index == c.best_index);

  std::vector<double> vals;
  for (const auto& rep : a.reports) vals.push_back(rep.validation_mse);
  std::sort(vals.begin(), vals.end());
  CHECK(a.reports[a.best_index].validation_mse <= vals[vals.size() / 2]);
  CHECK(a.reports[a.best_index].validation_mse == vals.front());
}

TEST_CASE("model json round trip") {
  std::mt19937_64 rng(41);
  Mlp net = random_net(8, 2, Activation::Tansig, rng, true);
  net.input_scaler = AffineScaler::fit({{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}, {0, 6}, {0, 7}, {0, 8}});
  net.output_scaler = AffineScaler({1.0}, {50.0});
  net.info = {"pgnn2", {"a", "b"}, 1e-4};
  const std::string text = net.to_json();
  CHECK(text.find("pgnnff-model-v1") != std::string::npos);
  const Mlp back = Mlp::from_json(text);
  CHECK(back.parameters() == net.parameters());
  CHECK(back.input_scaler == net.input_scaler);
  CHECK(back.output_scaler == net.output_scaler);
  CHECK(back.info == net.info);
  CHECK(back.pgl->inputs == net.pgl->inputs);
  CHECK(back.layers[0].activation == Activation::Tansig);
  CHECK(back.to_json() == text);

  CHECK_THROWS(Mlp::from_json("{\"format\":\"other\"}"));
  CHECK_THROWS(Mlp::from_json("not json"));
}

TEST_CASE("physical prediction applies both scalers") {
  Mlp net = Mlp::make(2, {}, Activation::Linear);
  VectorXd w(3);
  w << 1.0, 1.0, 0.0;
  net.set_parameters(w);
  net.input_scaler = AffineScaler({1.0, 0.0}, {2.0, 4.0});
  net.output_scaler = AffineScaler({10.0}, {5.0});
  const std::vector<double> x{3.0, 8.0};
  CHECK(net.predict(x) == doctest::Approx(10.0 + 5.0 * (1.0 + 2.0)).scale(0));
}

TEST_CASE("training config validation") {
  TrainConfig cfg;
  cfg.mu_increase = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.restarts = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  CHECK_NOTHROW(TrainConfig{}.validate());
}
