#include "pgff/ident.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "pgff/error.hpp"
#include "pgff/signals.hpp"
#include "text_format.hpp"

namespace pgff {

using json = nlohmann::json;

std::size_t DitherConfig::hold_samples(double ts) const {
  return static_cast<std::size_t>(std::llround(period / ts));
}

void DitherConfig::validate(double ts) const {
  if (!(std_dev >= 0.0) || !std::isfinite(std_dev)) throw InvalidArgument("dither: std_dev must be >= 0");
  if (!(period > 0.0) || !std::isfinite(period)) throw InvalidArgument("dither: period must be > 0");
  const double ratio = period / ts;
  if (std::llround(ratio) < 1 || std::abs(ratio - std::round(ratio)) > 1e-6 * ratio) {
    throw InvalidArgument("dither: period must be an integer multiple of the sample time");
  }
}

std::string_view to_string(Partition p) {
  switch (p) {
    case Partition::Unused: return "unused";
    case Partition::Train: return "train";
    case Partition::Validation: return "validation";
    case Partition::Test: return "test";
  }
  return "?";
}

Partition Split::label(std::size_t k) const {
  if (k < first || k >= end) return Partition::Unused;
  if (k < validation) return Partition::Train;
  if (k < test) return Partition::Validation;
  return Partition::Test;
}

std::vector<std::size_t> Split::rows(Partition p) const {
  std::size_t a = 0, b = 0;
  switch (p) {
    case Partition::Train: a = first; b = validation; break;
    case Partition::Validation: a = validation; b = test; break;
    case Partition::Test: a = test; b = end; break;
    case Partition::Unused: return {};
  }
  std::vector<std::size_t> out;
  out.reserve(b > a ? b - a : 0);
  for (std::size_t k = a; k < b; ++k) out.push_back(k);
  return out;
}

Split make_split(std::size_t n, double train_fraction, double validation_fraction) {
  if (!(train_fraction > 0.0) || !(validation_fraction >= 0.0) ||
      train_fraction + validation_fraction > 1.0) {
    throw InvalidArgument("split fractions must be positive and sum to at most 1");
  }
  if (n < 4) throw InvalidArgument("dataset too short to split");
  Split s;
  s.first = 2;
  s.end = n - 1;
  const std::size_t usable = s.end - s.first;
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(usable)));
  const auto n_val = static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(usable)));
  s.validation = s.first + n_train;
  s.test = s.validation + n_val;
  return s;
}

Dataset generate_dataset(const PlantParams& plant, const TrajectorySpec& traj,
                         const GenerateOptions& opt) {
  plant.validate();
  traj.validate();
  if (opt.cycles < 1) throw InvalidArgument("generate_dataset: cycles must be >= 1");
  const double ts = traj.sample_time;
  if (std::abs(ts - plant.sample_time) > 1e-15) {
    throw InvalidArgument("generate_dataset: trajectory and plant sample times differ");
  }
  opt.dither.validate(ts);

  const SetpointProfile profile = back_and_forth(plan_motion(traj), opt.cycles);
  const std::size_t n = profile.size();
  LtiFilter fb = discretize_cfb(ts, opt.feedback);
  std::unique_ptr<FeedforwardController> ff = opt.feedforward ? opt.feedforward->clone() : ff_none();
  ff->reset();

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t hold = opt.dither.hold_samples(ts);
  const double limit = 10.0 * std::max(std::abs(traj.displacement), 1e-3);

  Dataset d;
  d.t.resize(n);
  d.r = profile.positions;
  d.y.resize(n);
  d.u.resize(n);
  PlantState x;
  double dither = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k % hold == 0) dither = opt.dither.std_dev * noise(rng);
    const double e = d.r[k] - x.position;
    const double u = fb_step(fb, e) + ff->step(ReferenceWindow::at(d.r, k, ts)) + dither;
    d.t[k] = static_cast<double>(k) * ts;
    d.y[k] = x.position;
    d.u[k] = u;
    x = step(x, u, plant);
    if (!std::isfinite(x.position) || std::abs(x.position) > limit) {
      throw NumericalError("generate_dataset: closed loop unstable, |y| = " +
                           detail::fmt_short(std::abs(x.position)) + " m at sample " +
                           std::to_string(k + 1));
    }
  }
  d.split = make_split(n, opt.train_fraction, opt.validation_fraction);
  d.meta.seed = opt.seed;
  d.meta.dither = opt.dither;
  d.meta.trajectory = traj;
  d.meta.cycles = opt.cycles;
  d.meta.feedback_form = std::string(to_string(opt.feedback.form));
  d.meta.feedforward = ff->kind();
  return d;
}

void write_dataset_csv(std::ostream& os, const Dataset& d) {
  os << "k,t,r,y,u\n";
  for (std::size_t k = 0; k < d.size(); ++k) {
    os << k << ',' << detail::fmt17(d.t[k]) << ',' << detail::fmt17(d.r[k]) << ','
       << detail::fmt17(d.y[k]) << ',' << detail::fmt17(d.u[k]) << '\n';
  }
  if (!os) throw IoError("failed writing dataset CSV");
}

Dataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("dataset CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "k,t,r,y,u") throw IoError("dataset CSV: unexpected header '" + line + "'");
  Dataset d;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double v[5];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int c = 0; c < 5; ++c) {
      auto [next, ec] = std::from_chars(p, end, v[c]);
      if (ec != std::errc() || (c < 4 && (next == end || *next != ',')) || (c == 4 && next != end)) {
        throw IoError("dataset CSV: malformed line " + std::to_string(lineno));
      }
      p = next + 1;
    }
    if (v[0] != static_cast<double>(d.size())) {
      throw IoError("dataset CSV: non-consecutive index at line " + std::to_string(lineno));
    }
    d.t.push_back(v[1]);
    d.r.push_back(v[2]);
    d.y.push_back(v[3]);
    d.u.push_back(v[4]);
  }
  if (d.size() == 0) throw IoError("dataset CSV has no rows");
  if (d.size() >= 2) d.meta.trajectory.sample_time = d.t[1] - d.t[0];
  return d;
}

std::string dataset_meta_json(const Dataset& d) {
  const auto& tr = d.meta.trajectory;
  json j = {
      {"format", "pgnnff-dataset-v1"},
      {"rows", d.size()},
      {"seed", d.meta.seed},
      {"cycles", d.meta.cycles},
      {"feedback_form", d.meta.feedback_form},
      {"feedforward", d.meta.feedforward},
      {"dither", {{"std_dev", d.meta.dither.std_dev}, {"period", d.meta.dither.period}}},
      {"trajectory",
       {{"displacement", tr.displacement},
        {"v_max", tr.v_max},
        {"a_max", tr.a_max},
        {"j_max", tr.j_max},
        {"cruise_fraction", tr.cruise_fraction},
        {"sample_time", tr.sample_time},
        {"dwell_time", tr.dwell_time ? json(*tr.dwell_time) : json(nullptr)}}},
      {"split",
       {{"first", d.split.first},
        {"validation", d.split.validation},
        {"test", d.split.test},
        {"end", d.split.end}}},
  };
  return j.dump(2);
}

void apply_dataset_meta(Dataset& d, const std::string& json_text) {
  try {
    const json j = json::parse(json_text);
    if (j.at("format") != "pgnnff-dataset-v1") throw IoError("dataset sidecar: unknown format");
    if (j.at("rows").get<std::size_t>() != d.size()) {
      throw IoError("dataset sidecar: row count does not match the CSV");
    }
    d.meta.seed = j.at("seed").get<std::uint64_t>();
    d.meta.cycles = j.at("cycles").get<int>();
    d.meta.feedback_form = j.at("feedback_form").get<std::string>();
    d.meta.feedforward = j.at("feedforward").get<std::string>();
    d.meta.dither.std_dev = j.at("dither").at("std_dev").get<double>();
    d.meta.dither.period = j.at("dither").at("period").get<double>();
    const auto& jt = j.at("trajectory");
    auto& tr = d.meta.trajectory;
    tr.displacement = jt.at("displacement").get<double>();
    tr.v_max = jt.at("v_max").get<double>();
    tr.a_max = jt.at("a_max").get<double>();
    tr.j_max = jt.at("j_max").get<double>();
    tr.cruise_fraction = jt.at("cruise_fraction").get<double>();
    tr.sample_time = jt.at("sample_time").get<double>();
    if (jt.at("dwell_time").is_null()) tr.dwell_time.reset();
    else tr.dwell_time = jt.at("dwell_time").get<double>();
    const auto& js = j.at("split");
    d.split = {js.at("first").get<std::size_t>(), js.at("validation").get<std::size_t>(),
               js.at("test").get<std::size_t>(), js.at("end").get<std::size_t>()};
    if (!(d.split.first <= d.split.validation && d.split.validation <= d.split.test &&
          d.split.test <= d.split.end && d.split.end <= d.size())) {
      throw IoError("dataset sidecar: inconsistent split");
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("dataset sidecar: ") + e.what());
  }
}

LinearRegression ident_regression(const Dataset& d, const std::vector<std::size_t>& rows) {
  if (rows.empty()) throw InvalidArgument("identification: no rows");
  const double ts = d.sample_time();
  if (!(ts > 0.0)) throw InvalidArgument("identification: dataset sample time unknown");
  LinearRegression reg;
  reg.x.resize(static_cast<Eigen::Index>(rows.size()), 3);
  reg.target.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t k = rows[i];
    if (k < 2 || k + 1 >= d.size()) throw InvalidArgument("identification: row lacks history");
    const double v = central_velocity(d.y, k, ts);
    const double v1 = central_velocity(d.y, k - 1, ts);
    const auto r = static_cast<Eigen::Index>(i);
    reg.x(r, 0) = zoh_accel(d.y, k, ts);
    reg.x(r, 1) = v + v1;
    reg.x(r, 2) = sign0(v) + sign0(v1);
    reg.target[r] = d.u[k] + d.u[k - 1];
  }
  return reg;
}

Eigen::VectorXd solve_least_squares(const LinearRegression& reg) {
  if (reg.x.rows() < reg.x.cols()) throw InvalidArgument("least squares: fewer rows than unknowns");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(reg.x);
  if (qr.rank() < reg.x.cols()) {
    throw InvalidArgument("least squares: regressor matrix is rank deficient (" +
                          std::to_string(qr.rank()) + " of " + std::to_string(reg.x.cols()) +
                          "); the data is not persistently exciting");
  }
  return qr.solve(reg.target);
}

IdentResult ls_identify(const Dataset& d, Partition part) {
  const LinearRegression reg = ident_regression(d, d.split.rows(part));
  const Eigen::VectorXd th = solve_least_squares(reg);
  IdentResult res;
  res.estimates = {th[0], th[1], th[2]};
  res.rows = static_cast<std::size_t>(reg.x.rows());
  res.residual_mse = (reg.target - reg.x * th).squaredNorm() / static_cast<double>(res.rows);
  if (!(th[0] > 0.0)) throw NumericalError("identification produced a non-positive mass");
  return res;
}

IdentResult ls_identify_mass_only(const Dataset& d, Partition part) {
  LinearRegression reg = ident_regression(d, d.split.rows(part));
  reg.x = reg.x.leftCols(1).eval();
  const Eigen::VectorXd th = solve_least_squares(reg);
  IdentResult res;
  res.estimates = {th[0], 0.0, 0.0};
  res.rows = static_cast<std::size_t>(reg.x.rows());
  res.residual_mse = (reg.target - reg.x * th).squaredNorm() / static_cast<double>(res.rows);
  return res;
}

std::vector<double> measured_features(const Dataset& d, const InputSpec& spec, std::size_t k) {
  const ReferenceWindow w = ReferenceWindow::at(d.y, k, d.sample_time());
  return assemble_features(spec, w, k > 0 ? d.u[k - 1] : 0.0);
}

RegressionSet build_regression(const Dataset& d, const InputSpec& spec) {
  validate_spec(spec);
  const auto train_rows = d.split.rows(Partition::Train);
  if (train_rows.empty()) throw InvalidArgument("build_regression: empty training partition");
  const std::size_t nf = spec.size();

  std::vector<std::vector<double>> columns(nf);
  std::vector<double> targets;
  for (std::size_t k : train_rows) {
    const auto x = measured_features(d, spec, k);
    for (std::size_t c = 0; c < nf; ++c) columns[c].push_back(x[c]);
    targets.push_back(d.u[k]);
  }

  RegressionSet out;
  out.spec = spec;
  out.input_scaler = AffineScaler::fit(columns);
  out.output_scaler = AffineScaler::fit({targets});

  auto fill = [&](Partition p, TrainingSet& set) {
    const auto rows = d.split.rows(p);
    set.inputs.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(nf));
    set.targets.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto x = measured_features(d, spec, rows[i]);
      const auto r = static_cast<Eigen::Index>(i);
      for (std::size_t c = 0; c < nf; ++c) {
        set.inputs(r, static_cast<Eigen::Index>(c)) = out.input_scaler.normalize(c, x[c]);
      }
      set.targets[r] = out.output_scaler.normalize(0, d.u[rows[i]]);
    }
  };
  fill(Partition::Train, out.data.train);
  fill(Partition::Validation, out.data.validation);
  fill(Partition::Test, out.data.test);
  return out;
}

}  // namespace pgff
