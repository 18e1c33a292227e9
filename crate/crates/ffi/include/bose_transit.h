#ifndef BOSE_TRANSIT_H
#define BOSE_TRANSIT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum BtStatus {
  BT_STATUS_OK = 0,
  BT_STATUS_NULL_POINTER = 1,
  BT_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed JSON or a schema violation.
   */
  BT_STATUS_SCHEMA = 3,
  /**
   * Parameters outside their domain, or inconsistent inputs.
   */
  BT_STATUS_INVALID_INPUT = 4,
  /**
   * Step too large, untrusted truncation or loss of positivity.
   */
  BT_STATUS_NUMERICS = 5,
  BT_STATUS_IO = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  BT_STATUS_PANIC = 7,
} BtStatus;

/**
 * Bound families accepted by [`bt_bound_evaluate`].
 */
typedef enum BtBoundKind {
  BT_BOUND_KIND_CLOSED_TAU = 0,
  BT_BOUND_KIND_ONE_BODY_TAU = 1,
  BT_BOUND_KIND_MULTI_BODY_TAU = 2,
  BT_BOUND_KIND_GAIN_LOSS_TAU = 3,
  BT_BOUND_KIND_MU_MAX_ONE_BODY = 4,
  BT_BOUND_KIND_MU_MAX_GAIN_LOSS = 5,
  BT_BOUND_KIND_TRANSPORT_LIMIT_ONE_BODY = 6,
  BT_BOUND_KIND_TRANSPORT_LIMIT_GAIN_LOSS = 7,
  BT_BOUND_KIND_PROBABILITY_BOUND = 8,
} BtBoundKind;

/**
 * Bound parameters; start from [`bt_bound_params_new`] and adjust with the setters.
 */
typedef struct BtBoundParams BtBoundParams;

/**
 * Simulation plus the audit reports of one scenario run.
 */
typedef struct BtRun BtRun;

/**
 * Parsed scenario.
 */
typedef struct BtScenario BtScenario;

typedef struct BtBoundResult {
  /**
   * `+inf` for an infeasible time bound.
   */
  double value;
  bool feasible;
  double epsilon;
} BtBoundResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next failing call.
 */
const char *bt_last_error_message(void);

void bt_clear_error(void);

/**
 * Library version as a static string.
 */
const char *bt_version(void);

void bt_string_free(char *s);

enum BtStatus bt_scenario_from_json(const char *json, struct BtScenario **out_scenario);

enum BtStatus bt_scenario_load(const char *path, struct BtScenario **out_scenario);

void bt_scenario_free(struct BtScenario *s);

/**
 * Simulates the scenario and runs its audits.
 */
enum BtStatus bt_scenario_run(const struct BtScenario *s, struct BtRun **out_run);

void bt_run_free(struct BtRun *r);

/**
 * Whether every audit record of the run passed.
 */
enum BtStatus bt_run_passed(const struct BtRun *r, bool *out_passed);

enum BtStatus bt_run_report_count(const struct BtRun *r, size_t *out_count);

/**
 * All reports as a JSON array; free the string with `bt_string_free`.
 */
enum BtStatus bt_run_report_json(const struct BtRun *r, char **out_json);

/**
 * Number of time samples and sites of the stored trajectory.
 */
enum BtStatus bt_run_trajectory_shape(const struct BtRun *r,
                                      size_t *out_samples,
                                      size_t *out_sites);

/**
 * Time and normalized occupations of sample `k`; `out_x` must hold `sites` values.
 */
enum BtStatus bt_run_sample(const struct BtRun *r, size_t k, double *out_t, double *out_x);

/**
 * Parameters with `mu = 1`, no dissipation and one boson on one site.
 */
enum BtStatus bt_bound_params_new(double j,
                                  double phi,
                                  double alpha,
                                  size_t dimension,
                                  double epsilon,
                                  struct BtBoundParams **out_params);

void bt_bound_params_free(struct BtBoundParams *p);

enum BtStatus bt_bound_params_set_mu(struct BtBoundParams *p, double mu);

enum BtStatus bt_bound_params_set_loss(struct BtBoundParams *p, double gamma);

enum BtStatus bt_bound_params_set_gain_loss(struct BtBoundParams *p, double gamma1, double gamma2);

enum BtStatus bt_bound_params_set_population(struct BtBoundParams *p,
                                             size_t n_bosons,
                                             size_t lattice_size);

enum BtStatus bt_bound_evaluate(const struct BtBoundParams *p,
                                enum BtBoundKind kind,
                                double d_xy,
                                double tau,
                                size_t delta_n0,
                                struct BtBoundResult *out_result);

enum BtStatus bt_riemann_zeta(double s, double *out_value);

/**
 * Balanced optimal transport value. `cost` is row-major `n x n`, entry `(m, k)` the
 * cost of moving mass from point `k` to point `m`.
 */
enum BtStatus bt_wasserstein(size_t n,
                             const double *x,
                             const double *y,
                             const double *cost,
                             double *out_value);

/**
 * Cheapest way to deliver all of `y` from supplies capped by `x`; needs `sum x >= sum y`.
 */
enum BtStatus bt_generalized_wasserstein(size_t n,
                                         const double *x,
                                         const double *y,
                                         const double *cost,
                                         double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BOSE_TRANSIT_H */
