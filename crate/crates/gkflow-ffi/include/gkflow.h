/* C interface of the gkflow library. Generated by cbindgen; do not edit. */

#ifndef GKFLOW_H
#define GKFLOW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum GkStatus {
  GK_STATUS_OK = 0,
  GK_STATUS_NULL_POINTER = 1,
  GK_STATUS_INVALID_ARGUMENT = 2,
  GK_STATUS_UNKNOWN_NAME = 3,
  GK_STATUS_NUMERICAL = 4,
  GK_STATUS_IO = 5,
  GK_STATUS_PARSE = 6,
  GK_STATUS_DEGENERATE = 7,
  GK_STATUS_PANIC = 8,
} GkStatus;

/**
 * Opaque generalized Kähler state.
 */
typedef struct GkState GkState;

/**
 * Residuals of the generalized Kähler equations.
 */
typedef struct GkResiduals {
  double compat_plus;
  double compat_minus;
  double nijenhuis_plus;
  double nijenhuis_minus;
  /**
   * |d^c+ omega+ - H|
   */
  double r1;
  /**
   * |d^c- omega- + H|
   */
  double r2;
  /**
   * |dH|
   */
  double r3;
  double square_plus;
  double square_minus;
} GkResiduals;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *gk_last_error(void);

/**
 * Builds a built-in recipe.
 *
 * `n` is the grid size per resolved axis (ignored for HOPF_GK). `param` is
 * the amplitude (PERTURBED_TORUS), epsilon (COMMUTING_GK_TORUS) or radius
 * (HOPF_GK), and is ignored for FLAT_KAHLER_TORUS.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GkStatus gk_state_from_recipe(const char *name, size_t n, double param, struct GkState **out);

/**
 * Loads a state directory written by [`gk_state_save`] or a scenario snapshot.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GkStatus gk_state_load(const char *path, struct GkState **out);

/**
 * Writes the state as a directory of text snapshots.
 *
 * # Safety
 * `state` must come from this library; `path` must be NUL-terminated.
 */
enum GkStatus gk_state_save(const struct GkState *state, const char *path);

/**
 * Real dimension and number of sample points.
 *
 * # Safety
 * `state` must come from this library; outputs may be null.
 */
enum GkStatus gk_state_shape(const struct GkState *state, size_t *dim, size_t *npoints);

/**
 * Residuals of the generalized Kähler equations.
 *
 * # Safety
 * `state` must come from this library and `out` be valid.
 */
enum GkStatus gk_state_residuals(const struct GkState *state, struct GkResiduals *out);

/**
 * Evolves the state in place by GK_COUPLED or GAUGE_FIXED with RK4.
 *
 * If `csv_path` is non-null the residual time series is written there. On
 * degeneracy the state is left unchanged and `Degenerate` is returned.
 *
 * # Safety
 * `state` must come from this library; strings must be NUL-terminated.
 */
enum GkStatus gk_state_flow(struct GkState *state,
                            const char *system,
                            double dt,
                            size_t steps,
                            const char *csv_path);

/**
 * Runs a scenario config; artifacts go to `<out_root>/<name>/`.
 *
 * `exit_code` receives the CLI exit status of the run (0 pass or expected
 * failure, 1 failed checks, 3 degenerate).
 *
 * # Safety
 * Strings must be NUL-terminated; `exit_code` may be null.
 */
enum GkStatus gk_run_scenario(const char *config_path, const char *out_root, int *exit_code);

/**
 * Releases a state; null is ignored.
 *
 * # Safety
 * `state` must come from this library and not be used afterwards.
 */
void gk_state_free(struct GkState *state);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GKFLOW_H */
