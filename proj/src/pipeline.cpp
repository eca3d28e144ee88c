#include "pgff/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "pgff/error.hpp"
#include "pgff/signals.hpp"

namespace pgff {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

void note(const std::string& msg) { std::fprintf(stderr, "pgff: %s\n", msg.c_str()); }

void write_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_file(const fs::path& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing " + what + ": " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const fs::path& path) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void echo_config(const RunConfig& cfg) { write_file(output_path(cfg, "config.json"), cfg.to_json() + "\n"); }

json estimates_json(const PhysicalEstimates& e) {
  return {{"mass", e.mass}, {"viscous", e.viscous}, {"coulomb", e.coulomb}};
}

json report_json(const TrainReport& r) { return json::parse(r.to_json()); }

bool writes_trace(const RunConfig& cfg, const std::string& controller,
                  const std::vector<std::string>& selected) {
  if (cfg.evaluation.traces == "all") return true;
  if (cfg.evaluation.traces == "none") return false;
  for (const auto& s : selected)
    if (s == controller) return true;
  return controller.find("-n") == std::string::npos;
}

}  // namespace

fs::path output_path(const RunConfig& cfg, const std::string& relative) {
  const std::string root = cfg.output_dir.empty() ? default_output_dir() : cfg.output_dir;
  return fs::path(root) / relative;
}

Dataset cmd_generate(const RunConfig& cfg) {
  cfg.validate();
  echo_config(cfg);
  GenerateOptions opt;
  opt.cycles = cfg.identification_cycles;
  opt.dither = cfg.dither;
  opt.seed = cfg.seed;
  opt.feedback = cfg.feedback;
  opt.train_fraction = cfg.train_fraction;
  opt.validation_fraction = cfg.validation_fraction;
  note("generating " + std::to_string(opt.cycles) + "-cycle identification dataset");
  Dataset d = generate_dataset(cfg.plant, cfg.trajectory, opt);
  std::ostringstream csv;
  write_dataset_csv(csv, d);
  write_file(output_path(cfg, "dataset.csv"), csv.str());
  write_file(output_path(cfg, "dataset.json"), dataset_meta_json(d) + "\n");
  return d;
}

Dataset load_dataset(const RunConfig& cfg) {
  const fs::path csv_path = output_path(cfg, "dataset.csv");
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw IoError("missing dataset: " + csv_path.string() + " (run generate first)");
  Dataset d = read_dataset_csv(in);
  apply_dataset_meta(d, read_file(output_path(cfg, "dataset.json"), "dataset sidecar"));
  return d;
}

IdentResult cmd_identify(const RunConfig& cfg) {
  cfg.validate();
  echo_config(cfg);
  const Dataset d = load_dataset(cfg);
  const IdentResult full = ls_identify(d);
  const IdentResult mass = ls_identify_mass_only(d);
  json j = {{"estimates", estimates_json(full.estimates)},
            {"residual_mse", full.residual_mse},
            {"rows", full.rows},
            {"mass_only", {{"mass", mass.estimates.mass}, {"residual_mse", mass.residual_mse}}}};
  write_file(output_path(cfg, "estimates.json"), j.dump(2) + "\n");
  char buf[160];
  std::snprintf(buf, sizeof buf, "identified m=%.4f kg, f_v=%.3f N/(m/s), f_c=%.3f N",
                full.estimates.mass, full.estimates.viscous, full.estimates.coulomb);
  note(buf);
  return full;
}

PhysicalEstimates load_estimates(const RunConfig& cfg) {
  const fs::path p = output_path(cfg, "estimates.json");
  const json j = parse_json(read_file(p, "estimates (run identify first)"), p);
  try {
    const auto& e = j.at("estimates");
    PhysicalEstimates est{e.at("mass").get<double>(), e.at("viscous").get<double>(),
                          e.at("coulomb").get<double>()};
    est.validate();
    return est;
  } catch (const json::exception& e) {
    throw IoError("malformed estimates file: " + std::string(e.what()));
  }
}

TrainedModel train_model(const RunConfig& cfg, const Dataset& data, const PhysicalEstimates& est,
                         const ModelSpec& spec) {
  const RegressionSet rs = build_regression(data, input_spec(spec.kind));
  Mlp templ = make_model(spec.kind, spec.neurons, spec.activation, rs.input_scaler,
                         rs.output_scaler, est, cfg.pgl_uprev_coefficient);
  templ.info.sample_time = data.sample_time();

  TrainConfig tc = cfg.training;
  tc.seed = cfg.seed;
  InitPolicy policy;
  if (spec.kind == ModelKind::Pgnn2) {
    policy.keep_pgl = true;
    policy.keep_output_bias = true;
    policy.zero_output_weights = true;
    if (cfg.nonnegative_mass) tc.nonnegative_parameters = {templ.pgl_parameter_offset() + 1};
  }
  TrainedModel out;
  out.spec = spec;
  out.result = multistart(templ, rs.data, tc, policy, cfg.jobs);
  out.net = out.result.best;
  return out;
}

void cmd_train(const RunConfig& cfg, const std::vector<std::string>& only) {
  cfg.validate();
  echo_config(cfg);
  const Dataset d = load_dataset(cfg);
  const PhysicalEstimates est = load_estimates(cfg);
  for (const auto& want : only) {
    bool found = false;
    for (const auto& m : cfg.roster) found = found || m.label() == want;
    if (!found) throw ConfigError("'" + want + "' is not in the roster");
  }
  for (const auto& spec : cfg.roster) {
    const std::string label = spec.label();
    if (!only.empty() && std::find(only.begin(), only.end(), label) == only.end()) continue;
    note("training " + label + " (" + std::to_string(cfg.training.restarts) + " restarts)");
    const TrainedModel tm = train_model(cfg, d, est, spec);
    write_file(output_path(cfg, "models/" + label + ".json"), tm.net.to_json() + "\n");
    json rep = {{"label", label},
                {"best_index", tm.result.best_index},
                {"selected", report_json(tm.result.reports[tm.result.best_index])},
                {"restarts", json::array()}};
    for (const auto& r : tm.result.reports) rep["restarts"].push_back(report_json(r));
    write_file(output_path(cfg, "models/" + label + ".report.json"), rep.dump(1) + "\n");
    char buf[200];
    const auto& best = tm.result.reports[tm.result.best_index];
    std::snprintf(buf, sizeof buf, "  %s: restart %zu, test MSE %.4g N^2", label.c_str(),
                  tm.result.best_index, best.test_mse);
    note(buf);
  }
}

Mlp load_model(const RunConfig& cfg, const std::string& label) {
  const fs::path p = output_path(cfg, "models/" + label + ".json");
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("missing model for controller " + label + ": " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return Mlp::from_json(ss.str());
  } catch (const InvalidArgument& e) {
    throw IoError("model for controller " + label + " is invalid: " + e.what());
  }
}

std::vector<std::pair<std::string, SetpointProfile>> evaluation_profiles(const RunConfig& cfg) {
  const auto& ev = cfg.evaluation;
  const TrajectorySpec fast = scaled_spec(cfg.trajectory, ev.fast_scale, ev.fast_scale);
  const TrajectorySpec slow = scaled_spec(cfg.trajectory, ev.slow_scale, ev.slow_scale);
  return {{"nominal", back_and_forth(plan_motion(cfg.trajectory), ev.cycles)},
          {"fast", back_and_forth(plan_motion(fast), ev.cycles)},
          {"slow", back_and_forth(plan_motion(slow), ev.cycles)}};
}

std::size_t sign_violations(const ExperimentResult& res, const SetpointProfile& profile) {
  if (res.trace.u_ff.size() != profile.size()) {
    throw InvalidArgument("sign_violations: trace and profile lengths differ");
  }
  std::size_t bad = 0;
  for (std::size_t k = 0; k < profile.size(); ++k) {
    if (profile.segments[k] != Segment::Cruise) continue;
    const double v = central_velocity(profile.positions, k, profile.sample_time());
    if (sign0(res.trace.u_ff[k]) != sign0(v)) ++bad;
  }
  return bad;
}

std::string select_model(const RunConfig& cfg, ModelKind kind, std::size_t neurons) {
  std::string best;
  double best_val = 0.0;
  for (const auto& m : cfg.roster) {
    if (m.kind != kind || m.neurons != neurons) continue;
    const fs::path p = output_path(cfg, "models/" + m.label() + ".report.json");
    std::ifstream in(p);
    if (!in) continue;
    std::ostringstream ss;
    ss << in.rdbuf();
    const json j = parse_json(ss.str(), p);
    const double v = j.at("selected").at("validation_mse").get<double>();
    if (best.empty() || v < best_val) {
      best = m.label();
      best_val = v;
    }
  }
  return best;
}

void cmd_evaluate(const RunConfig& cfg) {
  cfg.validate();
  echo_config(cfg);
  const Dataset d = load_dataset(cfg);
  const PhysicalEstimates est = load_estimates(cfg);

  struct Entry {
    std::string id;
    std::unique_ptr<FeedforwardController> ctl;
    const ModelSpec* spec = nullptr;
  };
  std::vector<Entry> entries;
  entries.push_back({"none", ff_none()});
  entries.push_back({"mass_acc", ff_mass_acc(est)});
  entries.push_back({"friction_comp", ff_friction_comp(est)});
  if (cfg.evaluation.include_ideal) entries.push_back({"ideal", ideal_ff(cfg.plant)});
  for (const auto& m : cfg.roster) {
    entries.push_back({m.label(), ff_from_model(load_model(cfg, m.label())), &m});
  }

  std::vector<std::string> selected;
  json sel = json::object();
  for (ModelKind k : {ModelKind::Nnarx, ModelKind::Pgnn1, ModelKind::Pgnn2}) {
    const std::string s = select_model(cfg, k, 2);
    if (!s.empty()) {
      selected.push_back(s);
      sel[std::string(to_string(k))] = s;
    }
  }

  // Force-prediction errors on the identification data.
  std::vector<MseRow> rows;
  for (const auto& e : entries) {
    if (e.id == "ideal") continue;
    MseRow row;
    row.controller = e.spec ? std::string(to_string(e.spec->kind)) : e.id;
    if (e.spec) {
      row.neurons = static_cast<int>(e.spec->neurons);
      row.activation = std::string(to_string(e.spec->activation));
      const fs::path p = output_path(cfg, "models/" + e.id + ".report.json");
      const json j = parse_json(read_file(p, "training report for controller " + e.id), p);
      const auto& s = j.at("selected");
      row.train = s.at("train_mse").get<double>();
      row.validation = s.at("validation_mse").get<double>();
      row.test = s.at("test_mse").get<double>();
    } else {
      const auto pred = one_step_on_measured(*e.ctl, d);
      row.train = partition_mse(pred, d, Partition::Train);
      row.validation = partition_mse(pred, d, Partition::Validation);
      row.test = partition_mse(pred, d, Partition::Test);
    }
    row.replay_test = partition_mse(replay_on_measured(*e.ctl, d), d, Partition::Test);
    rows.push_back(row);
  }

  // Closed-loop tracking.
  const auto profiles = evaluation_profiles(cfg);
  std::vector<ExperimentResult> results;
  json mae_j = json::object(), sign_j = json::object(), cruise_j = json::object();
  json diverged_j = json::object();
  for (const auto& [name, prof] : profiles) {
    cruise_j[name] = prof.count(Segment::Cruise);
    note("evaluating on the " + name + " trajectory (" + std::to_string(prof.size()) + " samples)");
    for (auto& e : entries) {
      ExperimentResult res = try_tracking(*e.ctl, prof, cfg.plant, cfg.feedback, e.id, name);
      if (res.diverged_at) {
        note("  " + e.id + " diverged on the " + name + " trajectory at sample " +
             std::to_string(res.diverged_at));
        mae_j[e.id][name] = nullptr;
        sign_j[e.id][name] = nullptr;
        diverged_j[e.id][name] = res.diverged_at;
      } else {
        mae_j[e.id][name] = res.mae;
        sign_j[e.id][name] = sign_violations(res, prof);
      }
      if (writes_trace(cfg, e.id, selected)) {
        std::ostringstream os;
        write_trace_csv(os, res);
        write_file(output_path(cfg, "traces/" + e.id + "_" + name + ".csv"), os.str());
      }
      res.trace = {};
      results.push_back(std::move(res));
    }
  }

  const ReportTables t = make_report(rows, results);
  write_file(output_path(cfg, "tables/mse.csv"), t.mse_csv);
  write_file(output_path(cfg, "tables/mse.md"), t.mse_markdown);
  write_file(output_path(cfg, "tables/mae.csv"), t.mae_csv);
  write_file(output_path(cfg, "tables/mae.md"), t.mae_markdown);

  json mse_j = json::object();
  for (const auto& r : rows) {
    mse_j[r.label()] = {{"train", r.train},
                        {"validation", r.validation},
                        {"test", r.test},
                        {"replay_test", r.replay_test}};
  }
  json summary = {{"estimates", estimates_json(est)},
                  {"selected", sel},
                  {"mse", mse_j},
                  {"mae", mae_j},
                  {"cruise_samples", cruise_j},
                  {"sign_violations", sign_j},
                  {"diverged", diverged_j}};
  write_file(output_path(cfg, "summary.json"), summary.dump(2) + "\n");
  std::fprintf(stderr, "%s", t.mae_markdown.c_str());
}

void cmd_reproduce(const RunConfig& cfg) {
  cmd_generate(cfg);
  cmd_identify(cfg);
  cmd_train(cfg);
  cmd_evaluate(cfg);
}

}  // namespace pgff
