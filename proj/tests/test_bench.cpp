#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "pgff/bench.hpp"
#include "pgff/error.hpp"

using namespace pgff;

namespace {

const SetpointProfile& nominal() {
  static const SetpointProfile p = back_and_forth(plan_motion(TrajectorySpec{}), 1);
  return p;
}

ExperimentResult fake(const std::string& ctl, const std::string& traj, double mae_value) {
  ExperimentResult r;
  r.controller = ctl;
  r.trajectory = traj;
  r.mae = mae_value;
  return r;
}

}  // namespace

TEST_CASE("mse") {
  const std::vector<double> u{1.0, -2.0, 3.5};
  CHECK(mse(u, u) == 0.0);
  std::vector<double> shifted = u;
  for (auto& x : shifted) x += 1.0;
  CHECK(mse(shifted, u) == doctest::Approx(1.0).scale(0));
  CHECK_THROWS_AS(mse(u, std::vector<double>{1.0}), InvalidArgument);
  CHECK_THROWS_AS(mse(std::vector<double>{}, std::vector<double>{}), InvalidArgument);
}

TEST_CASE("mae") {
  CHECK(mae(std::vector<double>(10, 0.0)) == 0.0);
  CHECK(mae(std::vector<double>{1e-6, -1e-6}) == doctest::Approx(1e-6).scale(0));
  std::vector<double> alt(101);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = (i % 2) ? -2.5e-6 : 2.5e-6;
  CHECK(mae(alt) == doctest::Approx(2.5e-6).scale(0));
  CHECK_THROWS_AS(mae(std::vector<double>{}), InvalidArgument);
}

TEST_CASE("metrics ignore sample order") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> e(500), t(500);
  for (auto& x : e) x = n(rng);
  for (auto& x : t) x = n(rng);
  const double a = mae(e), b = mse(e, t);
  std::vector<std::size_t> idx(e.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<double> pe, pt;
  for (auto i : idx) {
    pe.push_back(e[i]);
    pt.push_back(t[i]);
  }
  CHECK(mae(pe) == doctest::Approx(a).epsilon(1e-12).scale(0));
  CHECK(mse(pe, pt) == doctest::Approx(b).epsilon(1e-12).scale(0));
  std::reverse(pe.begin(), pe.end());
  CHECK(mae(pe) == doctest::Approx(a).epsilon(1e-12).scale(0));
}

TEST_CASE("tracking baseline and repeatability") {
  auto none = ff_none();
  const ExperimentResult a = run_tracking(*none, nominal(), PlantParams{}, {}, "none", "nominal");
  const ExperimentResult b = run_tracking(*none, nominal(), PlantParams{}, {}, "none", "nominal");
  CHECK(a.mae > 0.0);
  CHECK(std::isfinite(a.mae));
  CHECK(a.mae == b.mae);
  CHECK(a.trace.e.size() == nominal().size());
  CHECK(a.controller == "none");
  CHECK(a.trajectory == "nominal");
  CHECK(a.mae == doctest::Approx(mae(a.trace.e)).epsilon(1e-15).scale(0));
  for (std::size_t k = 0; k < a.trace.e.size(); ++k) REQUIRE(a.trace.e[k] == a.trace.r[k] - a.trace.y[k]);
}

TEST_CASE("tracking rejects inconsistent sample times and unstable loops") {
  PlantParams p;
  p.sample_time = 2e-4;
  auto none = ff_none();
  CHECK_THROWS_AS(run_tracking(*none, nominal(), p), InvalidArgument);

  FeedbackDesign bad;
  bad.gain = -6600.0;
  CHECK_THROWS_AS(run_tracking(*none, nominal(), PlantParams{}, bad), NumericalError);
}

TEST_CASE("tracking ordering on the nominal trajectory") {
  const PlantParams p;
  const PhysicalEstimates truth{p.mass, p.friction.viscous, p.friction.coulomb};
  auto none = ff_none();
  auto mass = ff_mass_acc(truth);
  auto fric = ff_friction_comp(truth);
  auto ideal = ideal_ff(p);
  const double e0 = run_tracking(*none, nominal(), p).mae;
  const double e1 = run_tracking(*mass, nominal(), p).mae;
  const double e2 = run_tracking(*fric, nominal(), p).mae;
  const double e3 = run_tracking(*ideal, nominal(), p).mae;
  CHECK(e0 > e1);
  CHECK(e1 > e2);
  CHECK(e3 * 100.0 <= e1);
}

TEST_CASE("trace csv") {
  TrajectorySpec spec;
  spec.displacement = 0.0;
  spec.dwell_time = 5e-4;
  auto none = ff_none();
  const ExperimentResult r = run_tracking(*none, plan_motion(spec), PlantParams{});
  std::ostringstream os;
  write_trace_csv(os, r);
  const std::string s = os.str();
  CHECK(s.rfind("k,t,r,y,e,u_ff,u_fb\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 6);
}

TEST_CASE("measured replay and one-step prediction") {
  Dataset d;
  d.meta.trajectory.sample_time = 1e-4;
  for (std::size_t k = 0; k < 40; ++k) {
    d.t.push_back(static_cast<double>(k) * 1e-4);
    d.y.push_back(1e-6 * static_cast<double>(k * k));
    d.r.push_back(0.0);
    d.u.push_back(static_cast<double>(k % 3));
  }
  d.split = make_split(d.size());
  auto c = ff_mass_acc({2.0, 0.0, 0.0});
  const auto replay = replay_on_measured(*c, d);
  CHECK(replay == c->run(d.y, 1e-4));
  const auto one = one_step_on_measured(*c, d);
  for (std::size_t k = 1; k < d.size(); ++k)
    CHECK(one[k] == c->predict(ReferenceWindow::at(d.y, k, 1e-4), d.u[k - 1]));

  std::vector<double> exact = d.u;
  CHECK(partition_mse(exact, d, Partition::Test) == 0.0);
  for (auto& x : exact) x += 2.0;
  CHECK(partition_mse(exact, d, Partition::Train) == doctest::Approx(4.0).scale(0));
  CHECK_THROWS_AS(partition_mse(std::vector<double>(3), d, Partition::Train), InvalidArgument);
}

TEST_CASE("report tables are canonical") {
  std::vector<MseRow> rows{{"pgnn2", 2, "relu", 1.0, 2.0, 3.0, 4.0},
                           {"none", 0, "", 9e3, 8e3, 8.2e3, 8.2e3},
                           {"friction_comp", 0, "", 5.0, 6.0, 7.0, 8.0},
                           {"pgnn1", 4, "tansig", 1.5, 1.9, 3.5, 5.0}};
  std::vector<ExperimentResult> res{fake("pgnn2-n2-relu", "slow", 1e-6), fake("none", "fast", 2e-3),
                                    fake("none", "nominal", 4e-4), fake("none", "slow", 1e-4),
                                    fake("pgnn2-n2-relu", "nominal", 1e-6),
                                    fake("pgnn2-n2-relu", "fast", 2e-6)};
  const ReportTables a = make_report(rows, res);
  std::reverse(rows.begin(), rows.end());
  std::reverse(res.begin(), res.end());
  const ReportTables b = make_report(rows, res);
  CHECK(a.mse_csv == b.mse_csv);
  CHECK(a.mse_markdown == b.mse_markdown);
  CHECK(a.mae_csv == b.mae_csv);
  CHECK(a.mae_markdown == b.mae_markdown);

  std::istringstream csv(a.mse_csv);
  std::string line;
  std::getline(csv, line);
  CHECK(line == "controller,neurons,activation,train_mse,validation_mse,test_mse,replay_test_mse,flags");
  std::getline(csv, line);
  CHECK(line.rfind("none,0,,", 0) == 0);
  std::getline(csv, line);
  CHECK(line.rfind("friction_comp,", 0) == 0);
  std::getline(csv, line);
  CHECK(line.rfind("pgnn1,4,tansig,", 0) == 0);
  CHECK(line.find("validation:best") != std::string::npos);
  std::getline(csv, line);
  CHECK(line.rfind("pgnn2,2,relu,", 0) == 0);
  CHECK(line.find("train:best") != std::string::npos);
  CHECK(line.find("validation:second") != std::string::npos);

  std::istringstream mae_csv(a.mae_csv);
  std::getline(mae_csv, line);
  CHECK(line.find("nominal") < line.find("fast"));
  CHECK(line.find("fast") < line.find("slow"));
  CHECK(a.mae_markdown.find("**") != std::string::npos);
  CHECK(a.mae_markdown.find("none") < a.mae_markdown.find("pgnn2-n2-relu"));
}

TEST_CASE("single result gives one-row tables") {
  const ReportTables t = make_report({{"none", 0, "", 1.0, 1.0, 1.0, 1.0}}, {fake("none", "nominal", 1e-4)});
  CHECK(std::count(t.mse_csv.begin(), t.mse_csv.end(), '\n') == 2);
  CHECK(std::count(t.mae_csv.begin(), t.mae_csv.end(), '\n') == 2);
  CHECK(std::count(t.mae_markdown.begin(), t.mae_markdown.end(), '\n') == 3);
}

TEST_CASE("divergence is reported without an exception") {
  FeedbackDesign bad;
  bad.gain = -6600.0;
  auto none = ff_none();
  const ExperimentResult r = try_tracking(*none, nominal(), PlantParams{}, bad, "none", "nominal");
  REQUIRE(r.diverged_at > 0);
  CHECK(r.diverged_at < nominal().size());
  CHECK(std::isinf(r.mae));
  CHECK(r.trace.e.size() == r.diverged_at);

  const ExperimentResult ok = try_tracking(*none, nominal(), PlantParams{}, {}, "none", "nominal");
  CHECK(ok.diverged_at == 0);
  CHECK(ok.mae == run_tracking(*none, nominal(), PlantParams{}).mae);

  const ReportTables t = make_report({}, {r, fake("friction_comp", "nominal", 1e-5)});
  CHECK(t.mae_markdown.find("diverged") != std::string::npos);
  CHECK(t.mae_csv.find("none,inf,") != std::string::npos);
  CHECK(t.mae_csv.find("friction_comp,1e-05,nominal:best") != std::string::npos);
}
