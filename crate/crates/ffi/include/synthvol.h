#ifndef SYNTHVOL_H
#define SYNTHVOL_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SvStatus {
  SV_STATUS_OK = 0,
  SV_STATUS_NULL_POINTER = 1,
  SV_STATUS_INVALID_INPUT = 2,
  SV_STATUS_LATTICE = 3,
  SV_STATUS_NUMERICAL = 4,
  SV_STATUS_IO = 5,
  SV_STATUS_PARSE = 6,
  SV_STATUS_PANIC = 7,
} SvStatus;

typedef enum SvParity {
  SV_PARITY_CALL = 0,
  SV_PARITY_PUT = 1,
} SvParity;

typedef enum SvLattice {
  SV_LATTICE_CRR = 0,
  SV_LATTICE_LEISEN_REIMER = 1,
} SvLattice;

/**
 * Calibrated surface model loaded from a bundle.
 */
typedef struct SvModel SvModel;

/**
 * One option contract. `dte` is in trading days.
 */
typedef struct SvContract {
  double strike;
  double dte;
  enum SvParity parity;
  bool american;
  double rate;
} SvContract;

typedef struct SvGreeks {
  double price;
  double delta;
  double gamma;
  double vega;
  double vega_pct;
  bool aliasing_warning;
} SvGreeks;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after success.
 * Valid until the next call on the same thread.
 */
const char *sv_last_error(void);

/**
 * Lattice price of one contract.
 *
 * # Safety
 * `contract` and `out_price` must be valid pointers.
 */
enum SvStatus sv_price(double spot,
                       const struct SvContract *contract,
                       double sigma,
                       enum SvLattice lattice,
                       size_t steps,
                       double *out_price);

/**
 * Price plus central finite-difference Greeks with the default bumps.
 *
 * # Safety
 * `contract` and `out` must be valid pointers.
 */
enum SvStatus sv_greeks(double spot,
                        const struct SvContract *contract,
                        double sigma,
                        enum SvLattice lattice,
                        size_t steps,
                        struct SvGreeks *out);

/**
 * Loads a model bundle file written by calibration.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SvStatus sv_model_load(const char *path, struct SvModel **out);

/**
 * Parses a model bundle from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SvStatus sv_model_from_json(const char *json, struct SvModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from a loader in this library and not be used again.
 */
void sv_model_free(struct SvModel *model);

/**
 * Model IV for a ticker. Two-input shapes ignore `e` and `e_peer`.
 *
 * # Safety
 * `model` must be a live handle, `ticker` a NUL-terminated string and
 * `out_iv` a valid pointer.
 */
enum SvStatus sv_model_iv(const struct SvModel *model,
                          const char *ticker,
                          double dte,
                          double moneyness,
                          double e,
                          double e_peer,
                          double *out_iv);

/**
 * Runs a scenario from its JSON config and returns the stats summary as
 * JSON. A bundle path in the config resolves against `base_dir`, or the
 * working directory when `base_dir` is null.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string, `base_dir` null or
 * NUL-terminated, and `out_json` a valid pointer. Free the result with
 * [`sv_string_free`].
 */
enum SvStatus sv_scenario_run(const char *config_json, const char *base_dir, char **out_json);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used again.
 */
void sv_string_free(char *s);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sv_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYNTHVOL_H */
