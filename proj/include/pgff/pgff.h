/* pgff C API: linear-motor feedforward workbench.
 *
 * All functions return a pgff_status. On failure a message describing the
 * last error of the calling thread is available from pgff_last_error().
 * Handles are opaque and owned by the caller; release them with the matching
 * *_free function (NULL is accepted). */
#ifndef PGFF_H
#define PGFF_H

#include <stddef.h>

#if defined(PGFF_BUILDING_LIBRARY)
#define PGFF_API __attribute__((visibility("default")))
#else
#define PGFF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pgff_status {
  PGFF_OK = 0,
  PGFF_ERR_INVALID_ARGUMENT = 1,
  PGFF_ERR_CONFIG = 2,
  PGFF_ERR_NUMERICAL = 3,
  PGFF_ERR_IO = 4,
  PGFF_ERR_INTERNAL = 5
} pgff_status;

typedef struct pgff_config pgff_config;
typedef struct pgff_plant pgff_plant;
typedef struct pgff_controller pgff_controller;

PGFF_API const char* pgff_version(void);
/* Message of the last failed call on this thread; "" if none. */
PGFF_API const char* pgff_last_error(void);

/* ---- configuration ---------------------------------------------------- */

PGFF_API pgff_status pgff_config_default(pgff_config** out);
PGFF_API pgff_status pgff_config_load(const char* path, pgff_config** out);
/* `pointer` is a JSON pointer ("/training/restarts"), `value` a JSON literal. */
PGFF_API pgff_status pgff_config_set(pgff_config* cfg, const char* pointer, const char* value);
PGFF_API pgff_status pgff_config_set_seed(pgff_config* cfg, unsigned long long seed);
PGFF_API pgff_status pgff_config_set_output_dir(pgff_config* cfg, const char* dir);
PGFF_API pgff_status pgff_config_set_jobs(pgff_config* cfg, int jobs);
/* Three restarts and one identification cycle. */
PGFF_API pgff_status pgff_config_set_quick(pgff_config* cfg);
/* Copies the resolved configuration JSON into buf (NUL-terminated). `needed`
 * receives the required size including the terminator; buf may be NULL. */
PGFF_API pgff_status pgff_config_dump(const pgff_config* cfg, char* buf, size_t size,
                                      size_t* needed);
PGFF_API void pgff_config_free(pgff_config* cfg);

/* ---- pipeline commands ------------------------------------------------ */

PGFF_API pgff_status pgff_generate(const pgff_config* cfg);
PGFF_API pgff_status pgff_identify(const pgff_config* cfg);
/* `label` selects one roster entry ("pgnn2-n2-relu"); NULL trains all. */
PGFF_API pgff_status pgff_train(const pgff_config* cfg, const char* label);
PGFF_API pgff_status pgff_evaluate(const pgff_config* cfg);
PGFF_API pgff_status pgff_reproduce(const pgff_config* cfg);

/* ---- plant ------------------------------------------------------------ */

/* Friction force of the configured plant at (position, velocity). */
PGFF_API pgff_status pgff_friction_force(const pgff_config* cfg, double position,
                                         double velocity, double* force);
PGFF_API pgff_status pgff_plant_create(const pgff_config* cfg, pgff_plant** out);
/* Applies input force u for one sample; writes the new state. */
PGFF_API pgff_status pgff_plant_step(pgff_plant* plant, double u, double* position,
                                     double* velocity);
PGFF_API pgff_status pgff_plant_reset(pgff_plant* plant);
PGFF_API void pgff_plant_free(pgff_plant* plant);

/* ---- feedforward controllers ----------------------------------------- */

/* kind: "none", "mass_acc", "friction_comp" or "ideal". The model-based
 * kinds take mass / viscous / coulomb estimates; "ideal" uses the configured
 * plant. */
PGFF_API pgff_status pgff_controller_create(const pgff_config* cfg, const char* kind, double mass,
                                            double viscous, double coulomb,
                                            pgff_controller** out);
/* Network controller from a model JSON file written by pgff_train. */
PGFF_API pgff_status pgff_controller_load(const char* model_path, pgff_controller** out);
/* One sample from the reference taps r(t+1), r(t), r(t-1), r(t-2). */
PGFF_API pgff_status pgff_controller_step(pgff_controller* ctl, double r_next, double r,
                                          double r_prev, double r_prev2, double sample_time,
                                          double* u);
PGFF_API pgff_status pgff_controller_reset(pgff_controller* ctl);
PGFF_API void pgff_controller_free(pgff_controller* ctl);

#ifdef __cplusplus
}
#endif

#endif /* PGFF_H */
