// pgff: command-line front end over the C API.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pgff/pgff.h"

namespace {

int report(pgff_status s) {
  if (s != PGFF_OK) std::fprintf(stderr, "pgff: error: %s\n", pgff_last_error());
  return static_cast<int>(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-guided feedforward workbench for a linear motor"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pgff_version()));

  std::string config_path, out_dir;
  unsigned long long seed = 0;
  int jobs = 0;
  bool quick = false;
  std::vector<std::string> overrides;

  app.add_option("--config", config_path, "JSON configuration layered over the defaults")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Master seed for dither and weight initialization");
  app.add_option("--out", out_dir, "Output directory (default: $PGFF_OUT or ./pgff_out)");
  app.add_option("--jobs", jobs, "Worker threads for multistart training")->check(CLI::PositiveNumber);
  app.add_flag("--quick", quick, "Three restarts and one identification cycle");
  app.add_option("--set", overrides, "Override one field: /json/pointer=value (repeatable)");

  auto* gen = app.add_subcommand("generate", "Simulate the dithered identification experiment");
  auto* ident = app.add_subcommand("identify", "Least-squares mass and friction estimates");
  auto* train = app.add_subcommand("train", "Train the network roster");
  std::string model;
  train->add_option("--model", model, "Train only this roster entry, e.g. pgnn2-n2-relu");
  auto* eval = app.add_subcommand("evaluate", "Closed-loop comparison on three trajectories");
  auto* repro = app.add_subcommand("reproduce", "generate, identify, train and evaluate");
  for (auto* sub : {gen, ident, train, eval, repro}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(PGFF_ERR_CONFIG);
  }

  pgff_config* cfg = nullptr;
  pgff_status s = config_path.empty() ? pgff_config_default(&cfg)
                                      : pgff_config_load(config_path.c_str(), &cfg);
  if (s != PGFF_OK) return report(s);

  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "pgff: error: --set expects /pointer=value, got '%s'\n", o.c_str());
      pgff_config_free(cfg);
      return static_cast<int>(PGFF_ERR_CONFIG);
    }
    s = pgff_config_set(cfg, o.substr(0, eq).c_str(), o.substr(eq + 1).c_str());
    if (s != PGFF_OK) {
      pgff_config_free(cfg);
      return report(s);
    }
  }
  if (s == PGFF_OK && app.count("--seed")) s = pgff_config_set_seed(cfg, seed);
  if (s == PGFF_OK && !out_dir.empty()) s = pgff_config_set_output_dir(cfg, out_dir.c_str());
  if (s == PGFF_OK && jobs > 0) s = pgff_config_set_jobs(cfg, jobs);
  if (s == PGFF_OK && quick) s = pgff_config_set_quick(cfg);

  if (s == PGFF_OK) {
    if (*gen) s = pgff_generate(cfg);
    else if (*ident) s = pgff_identify(cfg);
    else if (*train) s = pgff_train(cfg, model.empty() ? nullptr : model.c_str());
    else if (*eval) s = pgff_evaluate(cfg);
    else if (*repro) s = pgff_reproduce(cfg);
  }
  pgff_config_free(cfg);
  return report(s);
}
