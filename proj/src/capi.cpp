#include "pgff/pgff.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "pgff/config.hpp"
#include "pgff/error.hpp"
#include "pgff/feedforward.hpp"
#include "pgff/pipeline.hpp"
#include "pgff/plant.hpp"

struct pgff_config {
  pgff::RunConfig cfg;
};

struct pgff_plant {
  pgff::PlantParams params;
  pgff::PlantState state;
};

struct pgff_controller {
  std::unique_ptr<pgff::FeedforwardController> ctl;
};

namespace {

thread_local std::string g_last_error;

pgff_status fail(pgff_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
pgff_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return PGFF_OK;
  } catch (const pgff::Error& e) {
    return fail(static_cast<pgff_status>(static_cast<int>(e.kind())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(PGFF_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PGFF_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(PGFF_ERR_INTERNAL, "unknown error");
  }
}

#define PGFF_REQUIRE(ptr)                                                  \
  do {                                                                     \
    if (!(ptr)) return fail(PGFF_ERR_INVALID_ARGUMENT, #ptr " is NULL");   \
  } while (0)

}  // namespace

extern "C" {

const char* pgff_version(void) { return "0.1.0"; }

const char* pgff_last_error(void) { return g_last_error.c_str(); }

pgff_status pgff_config_default(pgff_config** out) {
  PGFF_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new pgff_config{pgff::default_config()}; });
}

pgff_status pgff_config_load(const char* path, pgff_config** out) {
  PGFF_REQUIRE(path);
  PGFF_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new pgff_config{pgff::load_config(path)}; });
}

pgff_status pgff_config_set(pgff_config* cfg, const char* pointer, const char* value) {
  PGFF_REQUIRE(cfg);
  PGFF_REQUIRE(pointer);
  PGFF_REQUIRE(value);
  return guarded([&] { pgff::set_config_value(cfg->cfg, pointer, value); });
}

pgff_status pgff_config_set_seed(pgff_config* cfg, unsigned long long seed) {
  PGFF_REQUIRE(cfg);
  cfg->cfg.seed = seed;
  cfg->cfg.training.seed = seed;
  return PGFF_OK;
}

pgff_status pgff_config_set_output_dir(pgff_config* cfg, const char* dir) {
  PGFF_REQUIRE(cfg);
  PGFF_REQUIRE(dir);
  if (!*dir) return fail(PGFF_ERR_INVALID_ARGUMENT, "output directory is empty");
  cfg->cfg.output_dir = dir;
  return PGFF_OK;
}

pgff_status pgff_config_set_jobs(pgff_config* cfg, int jobs) {
  PGFF_REQUIRE(cfg);
  if (jobs < 1) return fail(PGFF_ERR_CONFIG, "jobs must be >= 1");
  cfg->cfg.jobs = jobs;
  return PGFF_OK;
}

pgff_status pgff_config_set_quick(pgff_config* cfg) {
  PGFF_REQUIRE(cfg);
  cfg->cfg.apply_quick();
  return PGFF_OK;
}

pgff_status pgff_config_dump(const pgff_config* cfg, char* buf, size_t size, size_t* needed) {
  PGFF_REQUIRE(cfg);
  return guarded([&] {
    const std::string s = cfg->cfg.to_json();
    if (needed) *needed = s.size() + 1;
    if (buf) {
      if (size < s.size() + 1) throw pgff::InvalidArgument("buffer too small for configuration");
      std::memcpy(buf, s.c_str(), s.size() + 1);
    }
  });
}

void pgff_config_free(pgff_config* cfg) { delete cfg; }

pgff_status pgff_generate(const pgff_config* cfg) {
  PGFF_REQUIRE(cfg);
  return guarded([&] { pgff::cmd_generate(cfg->cfg); });
}

pgff_status pgff_identify(const pgff_config* cfg) {
  PGFF_REQUIRE(cfg);
  return guarded([&] { pgff::cmd_identify(cfg->cfg); });
}

pgff_status pgff_train(const pgff_config* cfg, const char* label) {
  PGFF_REQUIRE(cfg);
  return guarded([&] {
    std::vector<std::string> only;
    if (label && *label) only.emplace_back(label);
    pgff::cmd_train(cfg->cfg, only);
  });
}

pgff_status pgff_evaluate(const pgff_config* cfg) {
  PGFF_REQUIRE(cfg);
  return guarded([&] { pgff::cmd_evaluate(cfg->cfg); });
}

pgff_status pgff_reproduce(const pgff_config* cfg) {
  PGFF_REQUIRE(cfg);
  return guarded([&] { pgff::cmd_reproduce(cfg->cfg); });
}

pgff_status pgff_friction_force(const pgff_config* cfg, double position, double velocity,
                                double* force) {
  PGFF_REQUIRE(cfg);
  PGFF_REQUIRE(force);
  return guarded([&] { *force = pgff::friction_force(position, velocity, cfg->cfg.plant.friction); });
}

pgff_status pgff_plant_create(const pgff_config* cfg, pgff_plant** out) {
  PGFF_REQUIRE(cfg);
  PGFF_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    cfg->cfg.plant.validate();
    *out = new pgff_plant{cfg->cfg.plant, {}};
  });
}

pgff_status pgff_plant_step(pgff_plant* plant, double u, double* position, double* velocity) {
  PGFF_REQUIRE(plant);
  return guarded([&] {
    plant->state = pgff::step(plant->state, u, plant->params);
    if (position) *position = plant->state.position;
    if (velocity) *velocity = plant->state.velocity;
  });
}

pgff_status pgff_plant_reset(pgff_plant* plant) {
  PGFF_REQUIRE(plant);
  plant->state = {};
  return PGFF_OK;
}

void pgff_plant_free(pgff_plant* plant) { delete plant; }

pgff_status pgff_controller_create(const pgff_config* cfg, const char* kind, double mass,
                                   double viscous, double coulomb, pgff_controller** out) {
  PGFF_REQUIRE(cfg);
  PGFF_REQUIRE(kind);
  PGFF_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    const std::string k = kind;
    const pgff::PhysicalEstimates est{mass, viscous, coulomb};
    std::unique_ptr<pgff::FeedforwardController> c;
    if (k == "none") c = pgff::ff_none();
    else if (k == "mass_acc") c = pgff::ff_mass_acc(est);
    else if (k == "friction_comp") c = pgff::ff_friction_comp(est);
    else if (k == "ideal") c = pgff::ideal_ff(cfg->cfg.plant);
    else throw pgff::InvalidArgument("unknown controller kind '" + k + "'");
    *out = new pgff_controller{std::move(c)};
  });
}

pgff_status pgff_controller_load(const char* model_path, pgff_controller** out) {
  PGFF_REQUIRE(model_path);
  PGFF_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    std::ifstream in(model_path, std::ios::binary);
    if (!in) throw pgff::IoError(std::string("cannot open model file ") + model_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    *out = new pgff_controller{pgff::ff_from_model(pgff::Mlp::from_json(ss.str()))};
  });
}

pgff_status pgff_controller_step(pgff_controller* ctl, double r_next, double r, double r_prev,
                                 double r_prev2, double sample_time, double* u) {
  PGFF_REQUIRE(ctl);
  PGFF_REQUIRE(u);
  if (!(sample_time > 0.0)) return fail(PGFF_ERR_INVALID_ARGUMENT, "sample_time must be > 0");
  return guarded([&] { *u = ctl->ctl->step({r_next, r, r_prev, r_prev2, sample_time}); });
}

pgff_status pgff_controller_reset(pgff_controller* ctl) {
  PGFF_REQUIRE(ctl);
  ctl->ctl->reset();
  return PGFF_OK;
}

void pgff_controller_free(pgff_controller* ctl) { delete ctl; }

}  // extern "C"
