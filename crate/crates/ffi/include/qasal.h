#ifndef QASAL_FFI_H
#define QASAL_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  QASAL_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  QASAL_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  QASAL_STATUS_INVALID_UTF8 = 2,
  /**
   * The configuration failed to parse or validate.
   */
  QASAL_STATUS_INVALID_CONFIG = 3,
  /**
   * An argument was out of range or inconsistent with the handle.
   */
  QASAL_STATUS_INVALID_ARGUMENT = 4,
  /**
   * The episode has ended; reset the environment first.
   */
  QASAL_STATUS_EPISODE_DONE = 5,
  /**
   * A file could not be read or written.
   */
  QASAL_STATUS_IO = 6,
  /**
   * A policy file is corrupt or of an unsupported version.
   */
  QASAL_STATUS_ARTIFACT = 7,
  /**
   * An output buffer is shorter than required.
   */
  QASAL_STATUS_BUFFER_TOO_SMALL = 8,
  /**
   * An internal error was caught before it could unwind into C.
   */
  QASAL_STATUS_PANIC = 9,
} QasalStatus;

typedef enum {
  QASAL_OUTCOME_KIND_SUCCESS = 0,
  QASAL_OUTCOME_KIND_COLLISION = 1,
  /**
   * Reservation signal filling the gap to a slot boundary.
   */
  QASAL_OUTCOME_KIND_RS = 2,
  /**
   * Collision-resolution pulse.
   */
  QASAL_OUTCOME_KIND_CR_PULSE = 3,
} QasalOutcomeKind;

/**
 * Standalone dual-variable controller.
 */
typedef struct QasalDual QasalDual;

/**
 * Control environment: simulator, metrics and dual controller.
 */
typedef struct QasalEnv QasalEnv;

/**
 * Trained Q-network loaded from a policy file.
 */
typedef struct QasalPolicy QasalPolicy;

/**
 * Shared-medium simulator plus the most recent window it produced.
 */
typedef struct QasalSimulator QasalSimulator;

/**
 * Channel bookkeeping of one simulated window, in microseconds.
 */
typedef struct {
  uint64_t start_us;
  uint64_t end_us;
  uint64_t idle_us;
  uint64_t busy_us;
  /**
   * Emitter time beyond a single emitter (overlapping transmissions).
   */
  uint64_t overlap_us;
  size_t outcome_count;
} QasalWindow;

/**
 * One node's channel occupancy inside the last window, in microseconds.
 */
typedef struct {
  uint64_t success_us;
  uint64_t collision_us;
  uint64_t rs_us;
  uint64_t cr_us;
} QasalNodeAirtime;

/**
 * A completed transmission of the last window.
 */
typedef struct {
  size_t node;
  uint64_t start_us;
  uint64_t end_us;
  QasalOutcomeKind kind;
  /**
   * Whether `access_delay_us` is meaningful (successful data only).
   */
  bool has_access_delay;
  uint64_t access_delay_us;
} QasalOutcome;

/**
 * Summary of one control step.
 */
typedef struct {
  /**
   * Windowed airtime fairness.
   */
  double f0;
  /**
   * Smoothed PC1 access delay in microseconds.
   */
  double f1;
  double v;
  double v_scaled;
  double v_neg;
  /**
   * Dual variable in force while the step ran.
   */
  double lambda;
  bool dual_updated;
  bool done;
  /**
   * 1-based step index inside the episode.
   */
  uint32_t step;
} QasalStep;

typedef struct {
  double lambda_max;
  /**
   * Steps between dual updates.
   */
  uint32_t t0;
  double eta_lambda;
  /**
   * Slope of the tanh scaling.
   */
  double kappa;
  /**
   * Smoothing factor of the signal the dual integrates.
   */
  double alpha_v;
} QasalDualParams;

/**
 * Shaped constraint signal of one observation.
 */
typedef struct {
  /**
   * Signed relative slack, positive when the constraint holds.
   */
  double v;
  /**
   * Value the dual integrates.
   */
  double v_scaled;
  /**
   * Negative part handed to a learner.
   */
  double v_neg;
} QasalSignal;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *qasal_version(void);

/**
 * Description of the last failure on this thread, or an empty string after
 * a successful call. Valid until the next library call on this thread.
 */
const char *qasal_last_error_message(void);

/**
 * Creates a simulator for the contenders and medium of `config_toml`
 * (null for defaults). Identical configuration and seed give identical runs.
 *
 * # Safety
 * `config_toml` is null or NUL-terminated; `out` is writable.
 */
QasalStatus qasal_simulator_new(const char *config_toml, uint64_t seed, QasalSimulator **out);

/**
 * Releases a simulator. Null is ignored.
 *
 * # Safety
 * `sim` is null or a live handle from `qasal_simulator_new`.
 */
void qasal_simulator_free(QasalSimulator *sim);

/**
 * # Safety
 * `sim` is a live handle; `out` is writable.
 */
QasalStatus qasal_simulator_node_count(QasalSimulator *sim, size_t *out);

/**
 * Simulated clock in microseconds.
 *
 * # Safety
 * `sim` is a live handle; `out` is writable.
 */
QasalStatus qasal_simulator_clock_us(QasalSimulator *sim, uint64_t *out);

/**
 * Advances the simulation by `duration_us` and keeps the resulting window for
 * `qasal_simulator_node_airtime` and `qasal_simulator_outcome`.
 *
 * # Safety
 * `sim` is a live handle; `out` is null or writable.
 */
QasalStatus qasal_simulator_run_for(QasalSimulator *sim, uint64_t duration_us, QasalWindow *out);

/**
 * # Safety
 * `sim` is a live handle; `out` is writable.
 */
QasalStatus qasal_simulator_node_airtime(QasalSimulator *sim, size_t node, QasalNodeAirtime *out);

/**
 * # Safety
 * `sim` is a live handle; `out` is writable.
 */
QasalStatus qasal_simulator_outcome(QasalSimulator *sim, size_t index, QasalOutcome *out);

/**
 * Creates an environment from `config_toml` (null for defaults). The
 * `scaling` key of the configuration selects the constraint shaping.
 *
 * # Safety
 * `config_toml` is null or NUL-terminated; `out` is writable.
 */
QasalStatus qasal_env_new(const char *config_toml, uint64_t seed, QasalEnv **out);

/**
 * Releases an environment. Null is ignored.
 *
 * # Safety
 * `env` is null or a live handle from `qasal_env_new`.
 */
void qasal_env_free(QasalEnv *env);

/**
 * Length of the augmented observation vector.
 *
 * # Safety
 * `env` is a live handle; `out` is writable.
 */
QasalStatus qasal_env_observation_dim(QasalEnv *env, size_t *out);

/**
 * Number of discrete actions.
 *
 * # Safety
 * `env` is a live handle; `out` is writable.
 */
QasalStatus qasal_env_action_count(QasalEnv *env, size_t *out);

/**
 * Restarts the medium with `seed` and sets the dual variable to `lambda0`.
 * The initial observation is copied into `obs` when it is non-null.
 *
 * # Safety
 * `env` is a live handle; `obs` is null or holds `obs_len` doubles.
 */
QasalStatus qasal_env_reset(QasalEnv *env,
                            uint64_t seed,
                            double lambda0,
                            double *obs,
                            size_t obs_len);

/**
 * Applies `action`, advances one control step and reports the outcome.
 *
 * # Safety
 * `env` is a live handle; `obs` is null or holds `obs_len` doubles; `out`
 * is null or writable.
 */
QasalStatus qasal_env_step(QasalEnv *env,
                           size_t action,
                           double *obs,
                           size_t obs_len,
                           QasalStep *out);

/**
 * Advances one control step without changing any MAC parameter.
 *
 * # Safety
 * Same as `qasal_env_step`.
 */
QasalStatus qasal_env_step_fixed(QasalEnv *env, double *obs, size_t obs_len, QasalStep *out);

/**
 * Default dual parameters.
 */
QasalDualParams qasal_dual_default_params(void);

/**
 * Creates a dual controller with `lambda = 0`. A null `params` selects the
 * defaults; `scaled` chooses tanh scaling with smoothing over the raw signal.
 *
 * # Safety
 * `params` is null or readable; `out` is writable.
 */
QasalStatus qasal_dual_new(const QasalDualParams *params, bool scaled, QasalDual **out);

/**
 * Releases a dual controller. Null is ignored.
 *
 * # Safety
 * `dual` is null or a live handle from `qasal_dual_new`.
 */
void qasal_dual_free(QasalDual *dual);

/**
 * Shapes the signal of one smoothed delay sample, folds it into the
 * controller and runs the dual update when due.
 *
 * # Safety
 * `dual` is a live handle; `signal` and `updated` are null or writable.
 */
QasalStatus qasal_dual_observe(QasalDual *dual,
                               double delay_smooth_us,
                               double d_th_us,
                               QasalSignal *signal,
                               bool *updated);

/**
 * # Safety
 * `dual` is a live handle; `out` is writable.
 */
QasalStatus qasal_dual_lambda(QasalDual *dual, double *out);

/**
 * Sets the dual variable, clamped to `[0, lambda_max]`.
 *
 * # Safety
 * `dual` is a live handle.
 */
QasalStatus qasal_dual_set_lambda(QasalDual *dual, double lambda);

/**
 * Loads and verifies a policy file written by the training command.
 *
 * # Safety
 * `path` is NUL-terminated; `out` is writable.
 */
QasalStatus qasal_policy_load(const char *path, QasalPolicy **out);

/**
 * Releases a policy. Null is ignored.
 *
 * # Safety
 * `policy` is null or a live handle from `qasal_policy_load`.
 */
void qasal_policy_free(QasalPolicy *policy);

/**
 * # Safety
 * `policy` is a live handle; `out` is writable.
 */
QasalStatus qasal_policy_observation_dim(QasalPolicy *policy, size_t *out);

/**
 * # Safety
 * `policy` is a live handle; `out` is writable.
 */
QasalStatus qasal_policy_action_count(QasalPolicy *policy, size_t *out);

/**
 * Greedy action for an augmented observation of `obs_len` values.
 *
 * # Safety
 * `policy` is a live handle; `obs` holds `obs_len` doubles; `action` is
 * writable.
 */
QasalStatus qasal_policy_act(QasalPolicy *policy,
                             const double *obs,
                             size_t obs_len,
                             size_t *action);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QASAL_FFI_H */
