#ifndef FRACGAME_H
#define FRACGAME_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FgStatus {
  FG_STATUS_OK = 0,
  FG_STATUS_CHECK_FAILED = 1,
  FG_STATUS_INPUT_ERROR = 2,
  FG_STATUS_NUMERICAL_ERROR = 3,
  FG_STATUS_NULL_POINTER = 4,
  FG_STATUS_PANIC = 5,
} FgStatus;

typedef enum FgMethod {
  FG_METHOD_CHOLESKY = 0,
  FG_METHOD_CIRCULANT = 1,
} FgMethod;

/**
 * An fBm path generator on a fixed grid.
 */
typedef struct FgPathSampler FgPathSampler;

/**
 * A solved game.
 */
typedef struct FgSolution FgSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *fg_last_error_message(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a pointer obtained from this library and not yet freed.
 */
void fg_string_free(char *s);

/**
 * Parses a JSON scenario and solves for `m*`.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` a writable pointer.
 */
enum FgStatus fg_solve_scenario_json(const char *json, struct FgSolution **out);

/**
 * # Safety
 * `sol` must be a live handle and `out` writable.
 */
enum FgStatus fg_solution_m_star(const struct FgSolution *sol, double *out);

/**
 * Value of the budget function at `m`.
 *
 * # Safety
 * `sol` must be a live handle and `out` writable.
 */
enum FgStatus fg_solution_budget(const struct FgSolution *sol, double m, double *out);

/**
 * Solution summary as a JSON string, released with [`fg_string_free`].
 *
 * # Safety
 * `sol` must be a live handle and `out` writable.
 */
enum FgStatus fg_solution_summary_json(const struct FgSolution *sol, char **out);

/**
 * # Safety
 * `sol` must be null or a handle not yet freed.
 */
void fg_solution_free(struct FgSolution *sol);

/**
 * fBm autocovariance `E[B_s B_t]`.
 *
 * # Safety
 * `out` must be writable.
 */
enum FgStatus fg_autocov(double s, double t, double h, double *out);

/**
 * Kernel `phi(s, t) = H(2H-1)|s-t|^(2H-2)`; fails on the diagonal.
 *
 * # Safety
 * `out` must be writable.
 */
enum FgStatus fg_phi(double s, double t, double h, double *out);

/**
 * Drift-removal kernel `K(t)` for drift `c` on `[0, horizon]`.
 *
 * # Safety
 * `out` must be writable.
 */
enum FgStatus fg_kernel_k(double c, double horizon, double h, double t, double *out);

/**
 * Creates a sampler for fBm on `steps` cells of `[0, horizon]`.
 *
 * # Safety
 * `out` must be writable.
 */
enum FgStatus fg_sampler_new(double horizon,
                             size_t steps,
                             double h,
                             enum FgMethod method,
                             uint64_t seed,
                             struct FgPathSampler **out);

/**
 * Writes path `stream` into `values`, which must hold `steps + 1` numbers.
 *
 * # Safety
 * `sampler` must be a live handle and `values` valid for `len` writes.
 */
enum FgStatus fg_sampler_path(const struct FgPathSampler *sampler,
                              uint64_t stream,
                              double *values,
                              size_t len);

/**
 * # Safety
 * `sampler` must be null or a handle not yet freed.
 */
void fg_sampler_free(struct FgPathSampler *sampler);

/**
 * Runs the full verification suite with the scenario's numerics and
 * returns the JSON-lines report through `out` (release with
 * [`fg_string_free`]). Returns `CHECK_FAILED` if any check fails; the
 * report is written in that case too.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` writable.
 */
enum FgStatus fg_verify_scenario_json(const char *json, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACGAME_H */
