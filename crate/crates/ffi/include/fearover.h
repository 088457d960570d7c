#ifndef FEAROVER_H
#define FEAROVER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FoStatus {
  FO_STATUS_OK = 0,
  FO_STATUS_NULL_POINTER = 1,
  FO_STATUS_INVALID_ARGUMENT = 2,
  FO_STATUS_IO = 3,
  FO_STATUS_PARSE = 4,
  FO_STATUS_SIMULATION = 5,
  FO_STATUS_NOT_FOUND = 6,
} FoStatus;

typedef struct FoFearModel FoFearModel;

typedef struct FoRouteDb FoRouteDb;

typedef struct FoRunLog FoRunLog;

/**
 * Appraisal inputs; `distance_to_bssp_m` may be `INFINITY`.
 */
typedef struct FoFearInputs {
  double distance_to_bssp_m;
  double signal_dbm;
  double comm_importance;
  double sor;
  double vtp;
  bool prospect;
  double desirability;
} FoFearInputs;

typedef struct FoAppraisal {
  double likelihood;
  double undesirability;
  double ig;
  double potential;
  double intensity;
} FoAppraisal;

typedef struct FoBsspHit {
  size_t index;
  double distance_m;
  double signal_dbm;
} FoBsspHit;

typedef struct FoReplayTotals {
  uint32_t worst;
  uint32_t average;
  uint32_t best;
} FoReplayTotals;

typedef struct FoRunSummary {
  size_t ticks;
  size_t attempts;
  size_t handovers;
  size_t episodes;
  bool invariants_pass;
} FoRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, valid until the next
 * failing call on the same thread. Never null.
 */
const char *fo_last_error(void);

/**
 * Fear model with the built-in rule bases and parameters.
 */
struct FoFearModel *fo_fear_model_new(void);

/**
 * # Safety
 * `model` must come from [`fo_fear_model_new`] and not have been freed.
 */
void fo_fear_model_free(struct FoFearModel *model);

/**
 * # Safety
 * `model` must be a live handle; `inputs` and `out` must be valid pointers.
 */
enum FoStatus fo_fear_appraise(const struct FoFearModel *model,
                               const struct FoFearInputs *inputs,
                               struct FoAppraisal *out);

/**
 * Great-circle distance in meters between two latitude/longitude pairs.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FoStatus fo_haversine_m(double lat1, double lon1, double lat2, double lon2, double *out);

/**
 * Loads a route database CSV.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FoStatus fo_route_db_load(const char *path, double bad_threshold_dbm, struct FoRouteDb **out);

/**
 * # Safety
 * `db` must come from [`fo_route_db_load`] and not have been freed.
 */
void fo_route_db_free(struct FoRouteDb *db);

/**
 * Number of points, or 0 for a null handle.
 *
 * # Safety
 * `db` must be null or a live handle.
 */
size_t fo_route_db_len(const struct FoRouteDb *db);

/**
 * # Safety
 * `db` must be null or a live handle.
 */
double fo_route_db_length_m(const struct FoRouteDb *db);

/**
 * Next bad-signal point strictly ahead of `position_m` for `provider`.
 * Returns [`FoStatus::NotFound`] when none lies ahead.
 *
 * # Safety
 * `db` must be a live handle, `provider` a NUL-terminated string and `out` a
 * valid pointer.
 */
enum FoStatus fo_route_db_next_bssp(const struct FoRouteDb *db,
                                    double position_m,
                                    const char *provider,
                                    struct FoBsspHit *out);

/**
 * One automaton step with the default thresholds. States are coded
 * `0..=8` for `1, 1a, 1b, 2, 2a, 2b, 3, 3a, 3b`; the symbol is written as
 * one of the ASCII letters `S`, `M`, `I`, `C`.
 *
 * # Safety
 * `next_state` and `symbol` must be valid pointers.
 */
enum FoStatus fo_pdfa_step(uint8_t state, double fear, uint8_t *next_state, char *symbol);

/**
 * Successful reference attempts under the worst, average and best presets.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FoStatus fo_replay_tables(struct FoReplayTotals *out);

/**
 * Loads and runs a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FoStatus fo_run_scenario(const char *path, struct FoRunLog **out);

/**
 * # Safety
 * `log` must come from [`fo_run_scenario`] and not have been freed.
 */
void fo_run_log_free(struct FoRunLog *log);

/**
 * # Safety
 * `log` must be a live handle and `out` a valid pointer.
 */
enum FoStatus fo_run_log_summary(const struct FoRunLog *log, struct FoRunSummary *out);

/**
 * Writes `runlog.csv` and the text reports into `dir`.
 *
 * # Safety
 * `log` must be a live handle and `dir` a NUL-terminated string.
 */
enum FoStatus fo_run_log_write(const struct FoRunLog *log, const char *dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FEAROVER_H */
