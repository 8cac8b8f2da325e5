#ifndef INTERLOCK_FFI_H
#define INTERLOCK_FFI_H

/* Generated with cbindgen:0.29.4 */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum InterlockStatus {
  INTERLOCK_STATUS_OK = 0,
  INTERLOCK_STATUS_NULL_POINTER = 1,
  // Bad configuration, program, goal or file contents.
  INTERLOCK_STATUS_INVALID_INPUT = 2,
  // The model failed while running.
  INTERLOCK_STATUS_RUNTIME_ERROR = 3,
  INTERLOCK_STATUS_INVALID_UTF8 = 4,
  INTERLOCK_STATUS_INDEX_OUT_OF_RANGE = 5,
  INTERLOCK_STATUS_PANIC = 6,
} InterlockStatus;

typedef enum InterlockSide {
  INTERLOCK_SIDE_LEFT = 0,
  INTERLOCK_SIDE_RIGHT = 1,
} InterlockSide;

// Simulator configuration.
typedef struct InterlockConfig InterlockConfig;

// Result of a simulated run.
typedef struct InterlockRun InterlockRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *interlock_last_error_message(void);

// Release a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void interlock_string_free(char *s);

// # Safety
// `out` must be a valid pointer.
enum InterlockStatus interlock_config_default(struct InterlockConfig **out);

// Parse a JSON configuration; missing fields take their defaults.
//
// # Safety
// `json` must be a nul-terminated string and `out` a valid pointer.
enum InterlockStatus interlock_config_from_json(const char *json, struct InterlockConfig **out);

// # Safety
// `config` must come from this library and not have been freed. Null is
// ignored.
void interlock_config_free(struct InterlockConfig *config);

// # Safety
// `config` must be a live handle.
enum InterlockStatus interlock_config_set_seed(struct InterlockConfig *config, uint64_t seed);

// Configuration as pretty JSON.
//
// # Safety
// `config` must be a live handle and `out` a valid pointer.
enum InterlockStatus interlock_config_to_json(const struct InterlockConfig *config, char **out);

// Contraction heading change in degrees for a spike anchored on `side`.
//
// # Safety
// `config` must be a live handle and `out` a valid pointer.
enum InterlockStatus interlock_alpha_deg(const struct InterlockConfig *config,
                                         enum InterlockSide side,
                                         double *out);

// Expansion heading change in degrees for a cycle contracting on `side`.
//
// # Safety
// `config` must be a live handle and `out` a valid pointer.
enum InterlockStatus interlock_beta_deg(const struct InterlockConfig *config,
                                        enum InterlockSide side,
                                        double *out);

// Signed heading change of one turn cycle in `direction`, degrees.
//
// # Safety
// `config` must be a live handle and `out` a valid pointer.
enum InterlockStatus interlock_cycle_turn_deg(const struct InterlockConfig *config,
                                              enum InterlockSide direction,
                                              double *out);

// Simulate a cycle program given as JSON.
//
// # Safety
// `config` must be a live handle, `program_json` a nul-terminated string
// and `out` a valid pointer.
enum InterlockStatus interlock_run_program(const struct InterlockConfig *config,
                                           const char *program_json,
                                           struct InterlockRun **out);

// # Safety
// `run` must come from this library and not have been freed. Null is
// ignored.
void interlock_run_free(struct InterlockRun *run);

// Number of telemetry samples, or 0 for a null handle.
//
// # Safety
// `run` must be a live handle or null.
size_t interlock_run_sample_count(const struct InterlockRun *run);

// Time, position and heading (radians) of sample `index`.
//
// # Safety
// `run` must be a live handle; the out pointers must be valid.
enum InterlockStatus interlock_run_sample(const struct InterlockRun *run,
                                          size_t index,
                                          double *t,
                                          double *x,
                                          double *y,
                                          double *heading);

// Summary of the run as JSON.
//
// # Safety
// `run` must be a live handle and `out` a valid pointer.
enum InterlockStatus interlock_run_summary_json(const struct InterlockRun *run, char **out);

// Write the telemetry CSV to `path`.
//
// # Safety
// `run` must be a live handle and `path` a nul-terminated string.
enum InterlockStatus interlock_run_write_telemetry_csv(const struct InterlockRun *run,
                                                       const char *path);

// Plan a goal given as JSON, e.g. `{"goal":"headland_turn","direction":"left"}`.
// `calibration_json` may be null to use the default calibration. The
// result holds the program and its predicted outcome.
//
// # Safety
// String arguments must be nul-terminated (or null where allowed) and
// `out` a valid pointer.
enum InterlockStatus interlock_plan_json(const char *goal_json,
                                         const char *calibration_json,
                                         char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INTERLOCK_FFI_H */
