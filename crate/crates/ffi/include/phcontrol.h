#ifndef PHCONTROL_H
#define PHCONTROL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Controller selectors for [`ph_simulate`].
 */
#define PH_CONTROLLER_NONE 0

#define PH_CONTROLLER_PASSIVE 1

#define PH_CONTROLLER_EKF 2

/**
 * Result of every fallible call.
 */
typedef enum PhStatus {
  PH_STATUS_OK = 0,
  PH_STATUS_NULL_POINTER = 1,
  PH_STATUS_INVALID_ARGUMENT = 2,
  PH_STATUS_BUFFER_TOO_SMALL = 3,
  PH_STATUS_CONFIG = 4,
  PH_STATUS_DIMENSION = 5,
  PH_STATUS_UNSUPPORTED = 6,
  PH_STATUS_NUMERICAL = 7,
  PH_STATUS_NON_CONVERGENCE = 8,
  PH_STATUS_NEWTON_DIVERGENCE = 9,
  PH_STATUS_RANGE = 10,
  PH_STATUS_PARSE = 11,
  PH_STATUS_IO = 12,
  PH_STATUS_PANIC = 13,
} PhStatus;

/**
 * A control-affine plant.
 */
typedef struct PhPlant PhPlant;

/**
 * A sampled trajectory. Closed-loop runs store the stacked plant and
 * controller state.
 */
typedef struct PhTrajectory PhTrajectory;

/**
 * A Galerkin value-function approximation.
 */
typedef struct PhValueFunction PhValueFunction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ph_version(void);

/**
 * Copies the last error message of the calling thread into `buf`,
 * truncating to `len - 1` bytes plus NUL. Returns the untruncated length
 * including the NUL, or 0 when the last call succeeded.
 *
 * # Safety
 * `buf` must be NULL or point to `len` writable bytes.
 */
size_t ph_last_error_message(char *buf, size_t len);

/**
 * Creates one of the named experiment plants (`"pendulum-paper"`,
 * `"vdp-paper"`, `"ph-counterexample"`).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum PhStatus ph_plant_from_preset(const char *name, struct PhPlant **out);

/**
 * Creates the linear plant `ż = (J − R)Qz + Bu`, `y = BᵀQz` with state
 * dimension `n` and `m` inputs. `j`, `r`, `q` are `n×n` and `b` is `n×m`.
 *
 * # Safety
 * The matrix pointers must reference arrays of the stated sizes.
 */
enum PhStatus ph_plant_lti(size_t n,
                           size_t m,
                           const double *j,
                           const double *r,
                           const double *q,
                           const double *b,
                           struct PhPlant **out);

/**
 * # Safety
 * `plant` must be NULL or a handle from this library not yet freed.
 */
void ph_plant_free(struct PhPlant *plant);

/**
 * State and input dimensions.
 *
 * # Safety
 * `plant` must be a live handle; `n` and `m` must be writable or NULL.
 */
enum PhStatus ph_plant_dims(const struct PhPlant *plant, size_t *n, size_t *m);

/**
 * Evaluates `ż = f(z) + B(z)u` and, when `y` is not NULL, the output `h(z)`.
 *
 * # Safety
 * `z` and `z_dot` hold `n` doubles, `u` and `y` hold `m`.
 */
enum PhStatus ph_plant_eval(const struct PhPlant *plant,
                            const double *z,
                            const double *u,
                            double *z_dot,
                            double *y);

/**
 * Solves the HJB equation of a planar plant by Galerkin policy iteration.
 *
 * `degree` is the per-axis Legendre degree and `domain` points to
 * `{x_lo, x_hi, y_lo, y_hi}`. For preset plants `degree = 0` and
 * `domain = NULL` select the reference settings. `iterations` receives the
 * number of policy updates when not NULL.
 *
 * # Safety
 * `domain` must be NULL or hold 4 doubles; `out` must be writable.
 */
enum PhStatus ph_solve_hjb(const struct PhPlant *plant,
                           size_t degree,
                           const double *domain,
                           struct PhValueFunction **out,
                           size_t *iterations);

/**
 * Loads a value function saved by [`ph_value_function_save`] or by the
 * `solve-hjb` command.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum PhStatus ph_value_function_load(const char *path, struct PhValueFunction **out);

/**
 * # Safety
 * `value` must be a live handle; `path` a NUL-terminated string.
 */
enum PhStatus ph_value_function_save(const struct PhValueFunction *value, const char *path);

/**
 * Evaluates `V(z)` and, when `gradient` is not NULL, `∇V(z)`.
 *
 * # Safety
 * `z` holds 2 doubles, `gradient` is NULL or holds 2, `out_value` is
 * writable.
 */
enum PhStatus ph_value_function_eval(const struct PhValueFunction *value,
                                     const double *z,
                                     double *out_value,
                                     double *gradient);

/**
 * # Safety
 * `value` must be NULL or a handle from this library not yet freed.
 */
void ph_value_function_free(struct PhValueFunction *value);

/**
 * Integrates the plant in closed loop with the selected controller
 * (`PH_CONTROLLER_*`) by the implicit midpoint rule on `points` uniform
 * nodes of `[0, horizon]`. `z0` is the plant initial state; the
 * controller state starts at the origin. A failure part way through
 * returns the error and no trajectory.
 *
 * # Safety
 * `z0` holds `n` doubles; `value` may be NULL only for
 * `PH_CONTROLLER_NONE`; `out` must be writable.
 */
enum PhStatus ph_simulate(const struct PhPlant *plant,
                          const struct PhValueFunction *value,
                          uint32_t controller,
                          const double *z0,
                          double horizon,
                          size_t points,
                          struct PhTrajectory **out);

/**
 * Runs the passive controller alone with zero input from `zh0` using the
 * discrete-gradient scheme. `power_residual` and `storage_increase`
 * receive the largest relative discrete power-balance residual and the
 * largest one-step increase of `V` when not NULL.
 *
 * # Safety
 * `zh0` holds 2 doubles; `out` must be writable.
 */
enum PhStatus ph_verify_passivity(const struct PhPlant *plant,
                                  const struct PhValueFunction *value,
                                  const double *zh0,
                                  double horizon,
                                  size_t points,
                                  struct PhTrajectory **out,
                                  double *power_residual,
                                  double *storage_increase);

/**
 * Number of time points.
 *
 * # Safety
 * `trajectory` must be a live handle or NULL (returns 0).
 */
size_t ph_trajectory_len(const struct PhTrajectory *trajectory);

/**
 * Length of each stored state vector.
 *
 * # Safety
 * `trajectory` must be a live handle or NULL (returns 0).
 */
size_t ph_trajectory_state_dim(const struct PhTrajectory *trajectory);

/**
 * Copies the time points into `times` (capacity `len`).
 *
 * # Safety
 * `times` must hold `len` doubles.
 */
enum PhStatus ph_trajectory_times(const struct PhTrajectory *trajectory, double *times, size_t len);

/**
 * Copies the states row-major (one row per time point) into `states`
 * (capacity `len`).
 *
 * # Safety
 * `states` must hold `len` doubles.
 */
enum PhStatus ph_trajectory_states(const struct PhTrajectory *trajectory,
                                   double *states,
                                   size_t len);

/**
 * Writes the trajectory CSV (`t`, states, inputs, outputs, `H`,
 * `power_residual`).
 *
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum PhStatus ph_trajectory_write_csv(const struct PhTrajectory *trajectory, const char *path);

/**
 * # Safety
 * `trajectory` must be NULL or a handle from this library not yet freed.
 */
void ph_trajectory_free(struct PhTrajectory *trajectory);

/**
 * Stabilizing solution of `AᵀP + PA − PBBᵀP + CᵀC = 0` with `A` `n×n`,
 * `B` `n×m`, `C` `p×n`. `p_out` receives `P` row-major; `residual`
 * receives the Frobenius norm of the residual when not NULL.
 *
 * # Safety
 * The matrix pointers must reference arrays of the stated sizes and
 * `p_out` must hold `n·n` doubles.
 */
enum PhStatus ph_solve_care(size_t n,
                            size_t m,
                            size_t p,
                            const double *a,
                            const double *b,
                            const double *c,
                            double *p_out,
                            double *residual);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHCONTROL_H */
