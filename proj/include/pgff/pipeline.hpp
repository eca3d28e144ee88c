#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pgff/bench.hpp"
#include "pgff/config.hpp"
#include "pgff/ident.hpp"
#include "pgff/mlp.hpp"

namespace pgff {

// Output layout under RunConfig::output_dir:
//   config.json                      resolved configuration
//   dataset.csv, dataset.json        identification data and sidecar
//   estimates.json                   least-squares physical estimates
//   models/<label>.json              selected network per roster entry
//   models/<label>.report.json       training reports of every restart
//   traces/<controller>_<traj>.csv   closed-loop traces
//   tables/{mse,mae}.{csv,md}        comparison tables
//   summary.json                     headline numbers

/// Simulates the identification experiment and writes the dataset.
Dataset cmd_generate(const RunConfig& cfg);
/// Fits the physical estimates on the training partition of the dataset.
IdentResult cmd_identify(const RunConfig& cfg);
/// Trains every roster entry, or only the labels listed in `only`.
void cmd_train(const RunConfig& cfg, const std::vector<std::string>& only = {});
/// Runs all controllers on the nominal, fast and slow trajectories.
void cmd_evaluate(const RunConfig& cfg);
/// generate, identify, train, evaluate.
void cmd_reproduce(const RunConfig& cfg);

std::filesystem::path output_path(const RunConfig& cfg, const std::string& relative);

Dataset load_dataset(const RunConfig& cfg);
PhysicalEstimates load_estimates(const RunConfig& cfg);
Mlp load_model(const RunConfig& cfg, const std::string& label);

struct TrainedModel {
  ModelSpec spec;
  Mlp net;
  MultistartResult result;
};

/// Multistart training of one roster entry on the dataset.
TrainedModel train_model(const RunConfig& cfg, const Dataset& data,
                         const PhysicalEstimates& est, const ModelSpec& spec);

/// Back-and-forth evaluation profiles named "nominal", "fast", "slow".
std::vector<std::pair<std::string, SetpointProfile>> evaluation_profiles(const RunConfig& cfg);

/// Number of cruise samples where sign(u_ff) differs from sign of the
/// reference velocity.
std::size_t sign_violations(const ExperimentResult& res, const SetpointProfile& profile);

/// Among roster entries of `kind` with `neurons` neurons, the label whose
/// training report has the lowest validation MSE. Empty if none trained.
std::string select_model(const RunConfig& cfg, ModelKind kind, std::size_t neurons);

}  // namespace pgff
