#ifndef EXTINCTION_H
#define EXTINCTION_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ExtStatus {
  EXT_STATUS_OK = 0,
  EXT_STATUS_NULL_POINTER = 1,
  EXT_STATUS_INVALID_ARGUMENT = 2,
  EXT_STATUS_INVALID_LAW = 3,
  EXT_STATUS_NO_FINITE_ROOT = 4,
  EXT_STATUS_NUMERICAL = 5,
  EXT_STATUS_CONFIG = 6,
  EXT_STATUS_BUFFER_TOO_SMALL = 7,
  EXT_STATUS_PANIC = 99,
} ExtStatus;

typedef enum ExtDurationKind {
  EXT_DURATION_KIND_DIRAC = 0,
  EXT_DURATION_KIND_EXPONENTIAL = 1,
  EXT_DURATION_KIND_UNIFORM = 2,
} ExtDurationKind;

typedef enum ExtTiltBasis {
  EXT_TILT_BASIS_LIFETIME = 0,
  EXT_TILT_BASIS_INFECTIOUS_PERIOD = 1,
} ExtTiltBasis;

/**
 * Opaque extinction-time CDF grid.
 */
typedef struct ExtCdfGrid ExtCdfGrid;

/**
 * Opaque infectivity law.
 */
typedef struct ExtLaw ExtLaw;

/**
 * `kind` holds an [`ExtDurationKind`] value. `Dirac`: value `a`.
 * `Exponential`: rate `a`. `Uniform`: `[a, b]`.
 */
typedef struct ExtDuration {
  uint32_t kind;
  double a;
  double b;
} ExtDuration;

typedef struct ExtCharacteristics {
  double r_eff;
  double rho;
  double s_bar;
  double lambda_hat_star;
} ExtCharacteristics;

/**
 * `truncation_bound` is NaN when no decay rate was given.
 */
typedef struct ExtMean {
  double mean_days;
  double tail_mass;
  double truncation_bound;
} ExtMean;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Thread-local message for the last failed call, or null. Valid until the
 * next call on the same thread.
 */
const char *ext_last_error_message(void);

/**
 * # Safety
 * `out` must be writable.
 */
enum ExtStatus ext_law_constant_rate(double lambda,
                                     struct ExtDuration eta,
                                     double s_bar,
                                     struct ExtLaw **out);

/**
 * # Safety
 * `out` must be writable.
 */
enum ExtStatus ext_law_exposed_constant_rate(double lambda,
                                             struct ExtDuration xi,
                                             struct ExtDuration eta,
                                             double s_bar,
                                             struct ExtLaw **out);

/**
 * Triangular ramp with peak `peak` reached `ramp` days after `τ`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ExtStatus ext_law_triangular(double peak,
                                  double ramp,
                                  struct ExtDuration tau,
                                  struct ExtDuration eta,
                                  double s_bar,
                                  struct ExtLaw **out);

/**
 * Law described by the `model` section of a JSON run configuration.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum ExtStatus ext_law_from_config_json(const char *json, struct ExtLaw **out);

/**
 * # Safety
 * `law` must come from an `ext_law_*` constructor and not be freed twice.
 */
void ext_law_free(struct ExtLaw *law);

/**
 * # Safety
 * `law` must be a live handle; `out` must be writable.
 */
enum ExtStatus ext_characteristics(const struct ExtLaw *law, struct ExtCharacteristics *out);

/**
 * # Safety
 * `law` must be a live handle; `out` must be writable.
 */
enum ExtStatus ext_solve_cdf(const struct ExtLaw *law,
                             size_t n,
                             double horizon,
                             struct ExtCdfGrid **out);

/**
 * CDF for one ancestor of uniformly distributed infection age; `tilt` is
 * an [`ExtTiltBasis`] value.
 *
 * # Safety
 * `law` must be a live handle; `out` must be writable.
 */
enum ExtStatus ext_solve_tilted_cdf(const struct ExtLaw *law,
                                    size_t n,
                                    double horizon,
                                    uint32_t tilt,
                                    struct ExtCdfGrid **out);

/**
 * Number of grid points, or 0 for a null handle.
 *
 * # Safety
 * `grid` must be a live handle or null.
 */
size_t ext_cdf_len(const struct ExtCdfGrid *grid);

/**
 * Copies the grid values into `buf`. Fails with `BUFFER_TOO_SMALL` (and
 * writes nothing) when `cap` is less than [`ext_cdf_len`].
 *
 * # Safety
 * `grid` must be a live handle; `buf` must hold `cap` doubles.
 */
enum ExtStatus ext_cdf_values(const struct ExtCdfGrid *grid, double *buf, size_t cap);

/**
 * Step-interpolated `F(t)`.
 *
 * # Safety
 * `grid` must be a live handle; `out` must be writable.
 */
enum ExtStatus ext_cdf_eval(const struct ExtCdfGrid *grid, double t, double *out);

/**
 * New grid holding `F^m`.
 *
 * # Safety
 * `grid` must be a live handle; `out` must be writable.
 */
enum ExtStatus ext_cdf_power(const struct ExtCdfGrid *grid, uint32_t m, struct ExtCdfGrid **out);

/**
 * Mean extinction time up to `cutoff`; pass NaN for `rho` to skip the
 * truncation bound.
 *
 * # Safety
 * `grid` must be a live handle; `out` must be writable.
 */
enum ExtStatus ext_cdf_mean(const struct ExtCdfGrid *grid,
                            double cutoff,
                            double rho,
                            struct ExtMean *out);

/**
 * # Safety
 * `grid` must come from this library and not be freed twice.
 */
void ext_cdf_free(struct ExtCdfGrid *grid);

/**
 * Markov SIR extinction CDF for one ancestor.
 *
 * # Safety
 * `out` must be writable.
 */
enum ExtStatus ext_sir_cdf(double r_eff, double rho, double t, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum ExtStatus ext_sir_mean(double r_eff, double rho, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EXTINCTION_H */
