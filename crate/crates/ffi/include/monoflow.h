#ifndef MONOFLOW_H
#define MONOFLOW_H

/* Generated by cbindgen from the monoflow-ffi crate. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MfStatus {
  MF_STATUS_OK = 0,
  MF_STATUS_NULL_POINTER = 1,
  MF_STATUS_INVALID_ARGUMENT = 2,
  MF_STATUS_PARSE_ERROR = 3,
  MF_STATUS_DOMAIN_ERROR = 4,
  MF_STATUS_BLOW_UP = 5,
  MF_STATUS_STEP_FAILURE = 6,
  MF_STATUS_TOLERANCE_AMBIGUITY = 7,
  MF_STATUS_ITERATION_CAP = 8,
  MF_STATUS_UNSUPPORTED = 9,
  MF_STATUS_SAMPLING_FAILURE = 10,
  MF_STATUS_OVERFLOW = 11,
  MF_STATUS_INTERNAL = 12,
} MfStatus;

typedef enum MfRelation {
  MF_RELATION_EQUAL = 0,
  MF_RELATION_STRICT_INTERIOR = 1,
  MF_RELATION_STRICT = 2,
  MF_RELATION_INCOMPARABLE = 3,
} MfRelation;

typedef enum MfDirection {
  MF_DIRECTION_FORWARD = 0,
  MF_DIRECTION_BACKWARD = 1,
} MfDirection;

typedef enum MfMethod {
  MF_METHOD_RK4 = 0,
  MF_METHOD_DP54 = 1,
} MfMethod;

/**
 * A parsed system with its cone.
 */
typedef struct MfSystem MfSystem;

/**
 * A sampled trajectory.
 */
typedef struct MfTrajectory MfTrajectory;

/**
 * An exact witness construction result.
 */
typedef struct MfWitness MfWitness;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. Valid until the next failing call.
 */
const char *mf_last_error_message(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void mf_string_free(char *s);

/**
 * Library version as a static string.
 */
const char *mf_version(void);

/**
 * Parses a system from its JSON configuration.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum MfStatus mf_system_from_json(const char *json, struct MfSystem **out);

/**
 * # Safety
 * `sys` must come from `mf_system_from_json` and not be freed twice.
 */
void mf_system_free(struct MfSystem *sys);

/**
 * Dimension of the system, or 0 for a null handle.
 *
 * # Safety
 * `sys` must be null or a live handle.
 */
size_t mf_system_dimension(const struct MfSystem *sys);

/**
 * Evaluates `F(x)` into `out`; both arrays have length `n`.
 *
 * # Safety
 * `x` and `out` must point to `n` doubles.
 */
enum MfStatus mf_system_eval(const struct MfSystem *sys, const double *x, size_t n, double *out);

/**
 * Jacobian at `x`, written row-major into `out` (length `n * n`).
 *
 * # Safety
 * `x` must point to `n` doubles and `out` to `n * n`.
 */
enum MfStatus mf_system_jacobian(const struct MfSystem *sys,
                                 const double *x,
                                 size_t n,
                                 double *out);

/**
 * Order relation of `x` and `y` in the system's cone.
 *
 * # Safety
 * `x` and `y` must point to `n` doubles; `out` must be writable.
 */
enum MfStatus mf_order_relation(const struct MfSystem *sys,
                                const double *x,
                                const double *y,
                                size_t n,
                                double tol,
                                enum MfRelation *out);

/**
 * Integrates from `x0` over `[0, t_end]`. For RK4 `step` is the fixed step;
 * for DP54 a positive `step` caps the step size and `rtol`/`atol` set the error control.
 *
 * # Safety
 * `x0` must point to `n` doubles; `out` must be writable.
 */
enum MfStatus mf_integrate(const struct MfSystem *sys,
                           const double *x0,
                           size_t n,
                           double t_end,
                           enum MfDirection direction,
                           enum MfMethod method,
                           double step,
                           double rtol,
                           double atol,
                           struct MfTrajectory **out);

/**
 * # Safety
 * `traj` must come from this library and not be freed twice.
 */
void mf_trajectory_free(struct MfTrajectory *traj);

/**
 * Number of samples, or 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t mf_trajectory_len(const struct MfTrajectory *traj);

/**
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t mf_trajectory_dimension(const struct MfTrajectory *traj);

/**
 * Copies all sample times into `out`, which must hold `cap >= len` doubles.
 *
 * # Safety
 * `out` must point to `cap` doubles.
 */
enum MfStatus mf_trajectory_times(const struct MfTrajectory *traj, double *out, size_t cap);

/**
 * Copies sample `k` into `out` (length `n`, the trajectory dimension).
 *
 * # Safety
 * `out` must point to `n` doubles.
 */
enum MfStatus mf_trajectory_state(const struct MfTrajectory *traj, size_t k, double *out, size_t n);

/**
 * Trajectory as CSV text (`t,x1,...,xN`).
 *
 * # Safety
 * `out` must be writable; free the string with `mf_string_free`.
 */
enum MfStatus mf_trajectory_to_csv(const struct MfTrajectory *traj, char **out);

/**
 * Non-oscillation verdict of a trajectory in the system's cone, as JSON.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum MfStatus mf_oscillation_verdict_json(const struct MfTrajectory *traj,
                                          const struct MfSystem *sys,
                                          double tol,
                                          char **out);

/**
 * Certificate JSON: exact for linear systems with orthant cones, sampled otherwise
 * (ordered pairs drawn from the box `[lo, hi]^N`).
 *
 * # Safety
 * `sys` must be live; `out` must be writable.
 */
enum MfStatus mf_certify_json(const struct MfSystem *sys,
                              double horizon,
                              size_t grid,
                              size_t pairs,
                              uint64_t seed,
                              double lo,
                              double hi,
                              char **out);

/**
 * Runs the exact witness construction on rational strings (`p/q` or decimals).
 *
 * # Safety
 * Strings must be NUL-terminated; `out` must be writable.
 */
enum MfStatus mf_witness_construct(const char *a,
                                   const char *b,
                                   const char *e,
                                   struct MfWitness **out);

/**
 * # Safety
 * `w` must come from this library and not be freed twice.
 */
void mf_witness_free(struct MfWitness *w);

/**
 * `(l*, n*)` as 64-bit integers; `Overflow` if either does not fit.
 *
 * # Safety
 * `w` must be live; outputs must be writable.
 */
enum MfStatus mf_witness_indices(const struct MfWitness *w, uint64_t *l_star, uint64_t *n_star);

/**
 * Full result as JSON; exact scalars are `"p/q"` strings.
 *
 * # Safety
 * `w` must be live; `out` must be writable.
 */
enum MfStatus mf_witness_to_json(const struct MfWitness *w, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MONOFLOW_H */
