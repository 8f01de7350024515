#ifndef LPMHD_H
#define LPMHD_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum {
  LPMHD_STATUS_OK = 0,
  LPMHD_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  LPMHD_STATUS_INVALID_UTF8 = 2,
  /**
   * Bad parameter, grid or configuration.
   */
  LPMHD_STATUS_INVALID_ARGUMENT = 3,
  /**
   * CFL violation, non-convergence or another numerical failure.
   */
  LPMHD_STATUS_NUMERICAL = 4,
  LPMHD_STATUS_BLOW_UP = 5,
  LPMHD_STATUS_IO = 6,
  LPMHD_STATUS_PANIC = 7,
  /**
   * The caller's buffer is too small; nothing was written.
   */
  LPMHD_STATUS_BUFFER_TOO_SMALL = 8,
} LpmhdStatus;

/**
 * Cached ledger weights for one grid and exponent pair `(s, r)`.
 */
typedef struct LpmhdLedger LpmhdLedger;

/**
 * Velocity and magnetic field of the MHD system at one time.
 */
typedef struct LpmhdState LpmhdState;

/**
 * A time stepper with fixed viscosity and step size.
 */
typedef struct LpmhdStepper LpmhdStepper;

/**
 * Energies and fluxes of the weighted energy balance at one time.
 */
typedef struct {
  double t;
  double energy_u;
  double energy_b;
  double i1;
  double i2;
  double i3;
  double i4;
  /**
   * `ν Σ_k W_s(k) |k|² |û_k|²`
   */
  double dissipation;
  /**
   * `d/dt` of `energy_u` implied by the balance.
   */
  double du_dt;
  /**
   * `d/dt` of `energy_b` implied by the balance.
   */
  double db_dt;
} LpmhdRates;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the message of the last failed call on this thread into `buf`
 * (NUL-terminated). `*len` receives the required size including the NUL.
 * Returns `LPMHD_STATUS_BUFFER_TOO_SMALL` if `buf_len` is insufficient;
 * `buf` may be NULL to query the size. With no pending error the message
 * is empty.
 *
 * # Safety
 * `buf` must be NULL or valid for `buf_len` bytes; `len` must be valid.
 */
LpmhdStatus lpmhd_last_error_message(char *buf, uintptr_t buf_len, uintptr_t *len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lpmhd_version(void);

/**
 * Orszag-Tang initial data on the 2-torus with `n` points per axis.
 *
 * # Safety
 * `state` must be valid for writes.
 */
LpmhdStatus lpmhd_state_orszag_tang(uintptr_t n, LpmhdState **state);

/**
 * Reads a checkpoint written by [`lpmhd_state_save`] or the CLI.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `state` valid for writes.
 */
LpmhdStatus lpmhd_state_load(const char *path, LpmhdState **state);

/**
 * # Safety
 * `state` must be a live handle; `path` a NUL-terminated string.
 */
LpmhdStatus lpmhd_state_save(const LpmhdState *state, const char *path);

/**
 * Writes time, energy `‖u‖₂² + ‖b‖₂²` and the larger relative divergence
 * defect `‖∇·f‖₂/‖∇f‖₂` of the two fields.
 * Any output pointer may be NULL.
 *
 * # Safety
 * `state` must be a live handle; non-NULL outputs valid for writes.
 */
LpmhdStatus lpmhd_state_info(const LpmhdState *state,
                             double *t,
                             double *energy,
                             double *divergence);

/**
 * # Safety
 * `state` must be NULL or a handle not yet freed.
 */
void lpmhd_state_free(LpmhdState *state);

/**
 * Stepper for `dim`-dimensional grids with `n` points per axis.
 *
 * # Safety
 * `stepper` must be valid for writes.
 */
LpmhdStatus lpmhd_stepper_new(uintptr_t dim,
                              uintptr_t n,
                              double nu,
                              double dt,
                              LpmhdStepper **stepper);

/**
 * Advances `state` in place by `steps` steps. On failure the state holds
 * the last successful step.
 *
 * # Safety
 * Both handles must be live.
 */
LpmhdStatus lpmhd_stepper_advance(const LpmhdStepper *stepper, LpmhdState *state, uintptr_t steps);

/**
 * # Safety
 * `stepper` must be NULL or a handle not yet freed.
 */
void lpmhd_stepper_free(LpmhdStepper *stepper);

/**
 * Ledger with the default dyadic cutoff for the exponent pair `(s, r)`.
 *
 * # Safety
 * `ledger` must be valid for writes.
 */
LpmhdStatus lpmhd_ledger_new(uintptr_t dim, uintptr_t n, double s, double r, LpmhdLedger **ledger);

/**
 * Evaluates the energy balance of `state` at viscosity `nu`.
 *
 * # Safety
 * Handles must be live; `rates` valid for writes.
 */
LpmhdStatus lpmhd_ledger_rates(const LpmhdLedger *ledger,
                               const LpmhdState *state,
                               double nu,
                               LpmhdRates *rates);

/**
 * `A(t) = ‖u‖²_{H^s} + ‖b‖²_{H^{s+1}}` in block norms.
 *
 * # Safety
 * Handles must be live; `a` valid for writes.
 */
LpmhdStatus lpmhd_ledger_a(const LpmhdLedger *ledger, const LpmhdState *state, double *a);

/**
 * # Safety
 * `ledger` must be NULL or a handle not yet freed.
 */
void lpmhd_ledger_free(LpmhdLedger *ledger);

/**
 * Runs one experiment by name (`"lp-verify"`, `"mhd-run"`, …) with a JSON
 * configuration (may be NULL for defaults) and writes its outputs to
 * `output_dir`. `exit_code` receives the code the CLI would exit with.
 *
 * # Safety
 * String arguments must be NUL-terminated or (for `config_json`) NULL;
 * `exit_code` valid for writes.
 */
LpmhdStatus lpmhd_run_experiment(const char *name,
                                 const char *config_json,
                                 const char *output_dir,
                                 int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LPMHD_H */
