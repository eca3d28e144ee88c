#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pgff/feedback.hpp"
#include "pgff/feedforward.hpp"
#include "pgff/ident.hpp"
#include "pgff/plant.hpp"
#include "pgff/trajgen.hpp"

namespace pgff {

/// (1/N) sum (p - t)^2. Throws on empty input or length mismatch.
double mse(std::span<const double> predictions, std::span<const double> targets);
/// (1/N) sum |e|. Throws on empty input.
double mae(std::span<const double> errors);

struct TrackingTrace {
  std::vector<double> t, r, y, e, u_ff, u_fb;
};

struct ExperimentResult {
  std::string controller;
  std::string trajectory;
  double mae = 0.0;  // m, +inf if the loop diverged
  /// Sample at which |y| left the stroke envelope; 0 if it never did. The
  /// trace then ends at that sample.
  std::size_t diverged_at = 0;
  TrackingTrace trace;
};

/// Closed loop from rest with zeroed controller states: per sample
/// e = r - y, u = C_fb(e) + C_ff, plant step. `controller` is reset first.
ExperimentResult run_tracking(FeedforwardController& controller, const SetpointProfile& profile,
                              const PlantParams& plant, const FeedbackDesign& feedback = {},
                              const std::string& controller_id = {},
                              const std::string& trajectory_id = {});

/// As run_tracking, but a divergent loop is reported through
/// ExperimentResult::diverged_at instead of an exception.
ExperimentResult try_tracking(FeedforwardController& controller, const SetpointProfile& profile,
                              const PlantParams& plant, const FeedbackDesign& feedback = {},
                              const std::string& controller_id = {},
                              const std::string& trajectory_id = {});

/// k,t,r,y,e,u_ff,u_fb
void write_trace_csv(std::ostream& os, const ExperimentResult& res);

/// Controller output on the dataset with measured y in place of r, streamed
/// from the first sample on its own previous output.
std::vector<double> replay_on_measured(const FeedforwardController& controller, const Dataset& d);

/// Controller output on the dataset with measured y in place of r and the
/// measured u(t-1), for every sample.
std::vector<double> one_step_on_measured(const FeedforwardController& controller, const Dataset& d);

/// MSE of `prediction` against the measured input over one partition.
double partition_mse(const std::vector<double>& prediction, const Dataset& d, Partition part);

/// Force-prediction errors for one controller configuration (N^2).
struct MseRow {
  std::string controller;  // kind
  int neurons = 0;         // 0 for model-based controllers
  std::string activation;  // empty for model-based controllers
  double train = 0.0;
  double validation = 0.0;
  double test = 0.0;
  /// Test-partition MSE of the controller streamed on its own past output.
  double replay_test = 0.0;

  std::string label() const;
};

struct ReportTables {
  std::string mse_csv;
  std::string mse_markdown;
  std::string mae_csv;
  std::string mae_markdown;
};

/// Builds the MSE table (one row per MseRow) and the MAE table (controllers x
/// trajectories). Rows are sorted by label and columns by trajectory name, so
/// the output does not depend on input order. The lowest and second-lowest
/// value of each column are flagged.
ReportTables make_report(std::vector<MseRow> mse_rows,
                         const std::vector<ExperimentResult>& results);

}  // namespace pgff
