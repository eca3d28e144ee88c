#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pgff/feedback.hpp"
#include "pgff/feedforward.hpp"
#include "pgff/ident.hpp"
#include "pgff/mlp.hpp"
#include "pgff/plant.hpp"
#include "pgff/trajgen.hpp"

namespace pgff {

/// One network in the training roster.
struct ModelSpec {
  ModelKind kind = ModelKind::Pgnn1;
  std::size_t neurons = 2;
  Activation activation = Activation::Relu;

  /// e.g. "pgnn2-n4-tansig"
  std::string label() const;
  bool operator==(const ModelSpec&) const = default;
};

struct EvaluationConfig {
  double fast_scale = 4.0;
  double slow_scale = 0.25;
  int cycles = 1;
  bool include_ideal = true;
  /// Which closed-loop traces to write: "all", "selected" (model-based
  /// controllers and the selected n=2 networks) or "none".
  std::string traces = "selected";
};

/// Everything a pipeline run depends on. The defaults are the reference
/// protocol: nominal plant, nominal move, 4 dithered cycles, 50 restarts,
/// {nnarx, pgnn1, pgnn2} x {2, 4} neurons x {relu, tansig}.
struct RunConfig {
  PlantParams plant;
  TrajectorySpec trajectory;
  FeedbackDesign feedback;
  DitherConfig dither;
  int identification_cycles = 4;
  double train_fraction = 0.70;
  double validation_fraction = 0.15;
  TrainConfig training;
  std::vector<ModelSpec> roster;
  /// Initial linear-branch weight on u(t-1); -1 embeds the friction
  /// compensator exactly, 0 is the literal alternative.
  double pgl_uprev_coefficient = -1.0;
  /// Project the linear-branch mass weight onto [0, inf) during training.
  bool nonnegative_mass = false;
  EvaluationConfig evaluation;
  std::uint64_t seed = 1;

  // Execution settings; they do not change any result and are not echoed.
  std::string output_dir;
  int jobs = 1;

  void validate() const;
  /// Three restarts and a single identification cycle.
  void apply_quick();

  /// Full configuration as JSON (execution settings omitted).
  std::string to_json() const;
};

RunConfig default_config();

/// Parses `text` as a partial configuration layered over the defaults.
/// Throws ConfigError on malformed or unknown fields.
RunConfig config_from_json(const std::string& text);
/// Reads and parses a configuration file. Throws IoError / ConfigError.
RunConfig load_config(const std::string& path);

/// Overrides one field: `pointer` is a JSON pointer such as "/training/restarts"
/// and `value` a JSON literal. Throws ConfigError.
void set_config_value(RunConfig& cfg, const std::string& pointer, const std::string& value);

/// Directory outputs go to when none is configured: $PGFF_OUT, else "pgff_out".
std::string default_output_dir();

}  // namespace pgff
