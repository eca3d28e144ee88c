#include "pgff/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pgff/error.hpp"

namespace pgff {

using json = nlohmann::json;

std::string ModelSpec::label() const {
  return std::string(to_string(kind)) + "-n" + std::to_string(neurons) + "-" +
         std::string(to_string(activation));
}

RunConfig default_config() {
  RunConfig c;
  for (ModelKind k : {ModelKind::Nnarx, ModelKind::Pgnn1, ModelKind::Pgnn2})
    for (std::size_t n : {2, 4})
      for (Activation a : {Activation::Relu, Activation::Tansig}) c.roster.push_back({k, n, a});
  c.output_dir = default_output_dir();
  return c;
}

std::string default_output_dir() {
  const char* env = std::getenv("PGFF_OUT");
  return env && *env ? std::string(env) : std::string("pgff_out");
}

void RunConfig::validate() const {
  try {
    plant.validate();
    trajectory.validate();
    dither.validate(trajectory.sample_time);
    training.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (plant.sample_time != trajectory.sample_time) {
    throw ConfigError("plant and trajectory sample times differ");
  }
  if (identification_cycles < 1) throw ConfigError("identification_cycles must be >= 1");
  if (!(train_fraction > 0.0) || !(validation_fraction > 0.0) ||
      train_fraction + validation_fraction >= 1.0) {
    throw ConfigError("split fractions must be positive and leave room for a test partition");
  }
  if (!(evaluation.fast_scale > 0.0) || !(evaluation.slow_scale > 0.0)) {
    throw ConfigError("evaluation scales must be > 0");
  }
  if (evaluation.cycles < 1) throw ConfigError("evaluation cycles must be >= 1");
  if (evaluation.traces != "all" && evaluation.traces != "selected" && evaluation.traces != "none") {
    throw ConfigError("evaluation traces must be all, selected or none");
  }
  for (const auto& m : roster) {
    if (m.neurons == 0) throw ConfigError("roster entry " + m.label() + " has no neurons");
  }
  for (std::size_t i = 0; i < roster.size(); ++i)
    for (std::size_t j = i + 1; j < roster.size(); ++j)
      if (roster[i] == roster[j]) throw ConfigError("roster lists " + roster[i].label() + " twice");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

void RunConfig::apply_quick() {
  training.restarts = 3;
  identification_cycles = 1;
}

std::string RunConfig::to_json() const {
  const auto& f = plant.friction;
  const auto& t = trajectory;
  const auto& tr = training;
  json roster_j = json::array();
  for (const auto& m : roster) {
    roster_j.push_back({{"kind", to_string(m.kind)},
                        {"neurons", m.neurons},
                        {"activation", to_string(m.activation)}});
  }
  json j = {
      {"plant",
       {{"mass", plant.mass},
        {"sample_time", plant.sample_time},
        {"friction",
         {{"viscous", f.viscous},
          {"coulomb", f.coulomb},
          {"stribeck", f.stribeck},
          {"stribeck_velocity", f.stribeck_velocity},
          {"ripple", f.ripple},
          {"ripple_frequency", f.ripple_frequency}}},
        {"ripple", plant.ripple ? json{{"amplitude", plant.ripple->amplitude},
                                       {"spatial_frequency", plant.ripple->spatial_frequency},
                                       {"phase", plant.ripple->phase}}
                                : json(nullptr)}}},
      {"trajectory",
       {{"displacement", t.displacement},
        {"v_max", t.v_max},
        {"a_max", t.a_max},
        {"j_max", t.j_max},
        {"cruise_fraction", t.cruise_fraction},
        {"sample_time", t.sample_time},
        {"dwell_time", t.dwell_time ? json(*t.dwell_time) : json(nullptr)}}},
      {"feedback",
       {{"form", to_string(feedback.form)},
        {"gain", feedback.gain},
        {"integrator_corner", feedback.integrator_corner},
        {"lead_zero", feedback.lead_zero},
        {"lead_pole", feedback.lead_pole},
        {"lowpass", feedback.lowpass}}},
      {"dither", {{"std_dev", dither.std_dev}, {"period", dither.period}}},
      {"identification",
       {{"cycles", identification_cycles},
        {"train_fraction", train_fraction},
        {"validation_fraction", validation_fraction}}},
      {"training",
       {{"max_iterations", tr.max_iterations},
        {"mu_init", tr.mu_init},
        {"mu_increase", tr.mu_increase},
        {"mu_decrease", tr.mu_decrease},
        {"gradient_tolerance", tr.gradient_tolerance},
        {"cost_tolerance", tr.cost_tolerance},
        {"mu_max", tr.mu_max},
        {"restarts", tr.restarts}}},
      {"roster", roster_j},
      {"pgl", {{"uprev_coefficient", pgl_uprev_coefficient}, {"nonnegative_mass", nonnegative_mass}}},
      {"evaluation",
       {{"fast_scale", evaluation.fast_scale},
        {"slow_scale", evaluation.slow_scale},
        {"cycles", evaluation.cycles},
        {"include_ideal", evaluation.include_ideal},
        {"traces", evaluation.traces}}},
      {"seed", seed},
  };
  return j.dump(2);
}

namespace {

void check_known(const json& defaults, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError("configuration" + (path.empty() ? "" : " at " + path) + " must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string p = path + "/" + it.key();
    if (!defaults.contains(it.key())) throw ConfigError("unknown configuration field " + p);
    const json& d = defaults.at(it.key());
    if (d.is_object() && !it.value().is_null()) check_known(d, it.value(), p);
  }
}

RunConfig parse_full(const json& j) {
  RunConfig c;
  const auto& jp = j.at("plant");
  c.plant.mass = jp.at("mass").get<double>();
  c.plant.sample_time = jp.at("sample_time").get<double>();
  const auto& jf = jp.at("friction");
  auto& f = c.plant.friction;
  f.viscous = jf.at("viscous").get<double>();
  f.coulomb = jf.at("coulomb").get<double>();
  f.stribeck = jf.at("stribeck").get<double>();
  f.stribeck_velocity = jf.at("stribeck_velocity").get<double>();
  f.ripple = jf.at("ripple").get<double>();
  f.ripple_frequency = jf.at("ripple_frequency").get<double>();
  if (!jp.contains("ripple") || jp.at("ripple").is_null()) {
    c.plant.ripple.reset();
  } else {
    const auto& jr = jp.at("ripple");
    c.plant.ripple = ForceRipple{jr.value("amplitude", 0.0), jr.value("spatial_frequency", 0.0),
                                 jr.value("phase", 0.0)};
  }

  const auto& jt = j.at("trajectory");
  auto& t = c.trajectory;
  t.displacement = jt.at("displacement").get<double>();
  t.v_max = jt.at("v_max").get<double>();
  t.a_max = jt.at("a_max").get<double>();
  t.j_max = jt.at("j_max").get<double>();
  t.cruise_fraction = jt.at("cruise_fraction").get<double>();
  t.sample_time = jt.at("sample_time").get<double>();
  if (!jt.contains("dwell_time") || jt.at("dwell_time").is_null()) t.dwell_time.reset();
  else t.dwell_time = jt.at("dwell_time").get<double>();

  const auto& jb = j.at("feedback");
  c.feedback.form = feedback_form_from_string(jb.at("form").get<std::string>());
  c.feedback.gain = jb.at("gain").get<double>();
  c.feedback.integrator_corner = jb.at("integrator_corner").get<double>();
  c.feedback.lead_zero = jb.at("lead_zero").get<double>();
  c.feedback.lead_pole = jb.at("lead_pole").get<double>();
  c.feedback.lowpass = jb.at("lowpass").get<double>();

  c.dither.std_dev = j.at("dither").at("std_dev").get<double>();
  c.dither.period = j.at("dither").at("period").get<double>();

  const auto& ji = j.at("identification");
  c.identification_cycles = ji.at("cycles").get<int>();
  c.train_fraction = ji.at("train_fraction").get<double>();
  c.validation_fraction = ji.at("validation_fraction").get<double>();

  const auto& jtr = j.at("training");
  auto& tr = c.training;
  tr.max_iterations = jtr.at("max_iterations").get<int>();
  tr.mu_init = jtr.at("mu_init").get<double>();
  tr.mu_increase = jtr.at("mu_increase").get<double>();
  tr.mu_decrease = jtr.at("mu_decrease").get<double>();
  tr.gradient_tolerance = jtr.at("gradient_tolerance").get<double>();
  tr.cost_tolerance = jtr.at("cost_tolerance").get<double>();
  tr.mu_max = jtr.at("mu_max").get<double>();
  tr.restarts = jtr.at("restarts").get<int>();

  for (const auto& jm : j.at("roster")) {
    ModelSpec m;
    m.kind = model_kind_from_string(jm.at("kind").get<std::string>());
    m.neurons = jm.at("neurons").get<std::size_t>();
    m.activation = activation_from_string(jm.at("activation").get<std::string>());
    c.roster.push_back(m);
  }

  c.pgl_uprev_coefficient = j.at("pgl").at("uprev_coefficient").get<double>();
  c.nonnegative_mass = j.at("pgl").at("nonnegative_mass").get<bool>();

  const auto& je = j.at("evaluation");
  c.evaluation.fast_scale = je.at("fast_scale").get<double>();
  c.evaluation.slow_scale = je.at("slow_scale").get<double>();
  c.evaluation.cycles = je.at("cycles").get<int>();
  c.evaluation.include_ideal = je.at("include_ideal").get<bool>();
  c.evaluation.traces = je.at("traces").get<std::string>();

  c.seed = j.at("seed").get<std::uint64_t>();
  c.training.seed = c.seed;
  return c;
}

RunConfig parse_layered(const json& user) {
  RunConfig base = default_config();
  json merged = json::parse(base.to_json());
  check_known(merged, user, "");
  // A null in the patch removes the key, which the parser reads as "unset".
  merged.merge_patch(user);
  RunConfig c;
  try {
    c = parse_full(merged);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  }
  c.output_dir = base.output_dir;
  c.jobs = base.jobs;
  c.validate();
  return c;
}

}  // namespace

RunConfig config_from_json(const std::string& text) {
  json user;
  try {
    user = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
  return parse_layered(user);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open configuration file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void set_config_value(RunConfig& cfg, const std::string& pointer, const std::string& value) {
  json j = json::parse(cfg.to_json());
  json v;
  try {
    v = json::parse(value);
  } catch (const json::exception&) {
    v = value;  // bare word, taken as a string
  }
  try {
    const json::json_pointer ptr(pointer);
    if (!j.contains(ptr)) {
      const json::json_pointer parent = ptr.parent_pointer();
      if (ptr.empty() || !j.contains(parent) || !j.at(parent).is_null()) {
        throw ConfigError("unknown configuration field " + pointer);
      }
      // Filling an optional sub-object that is currently null.
    }
    j[ptr] = v;
  } catch (const json::exception& e) {
    throw ConfigError("bad configuration path '" + pointer + "': " + e.what());
  }
  const std::string out_dir = cfg.output_dir;
  const int jobs = cfg.jobs;
  cfg = parse_layered(j);
  cfg.output_dir = out_dir;
  cfg.jobs = jobs;
}

}  // namespace pgff
