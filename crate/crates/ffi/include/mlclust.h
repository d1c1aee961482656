#ifndef MLCLUST_H
#define MLCLUST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum MlcStatus {
  MLC_STATUS_OK = 0,
  MLC_STATUS_NULL_POINTER = 1,
  MLC_STATUS_INVALID_INPUT = 2,
  MLC_STATUS_DIMENSION_MISMATCH = 3,
  MLC_STATUS_TOO_LARGE = 4,
  MLC_STATUS_NUMERICAL = 5,
  MLC_STATUS_PARSE = 6,
  MLC_STATUS_IO = 7,
  MLC_STATUS_PANIC = 8,
} MlcStatus;

typedef enum MlcTermination {
  MLC_TERMINATION_MAX_GENERATIONS = 0,
  MLC_TERMINATION_STALLED = 1,
  MLC_TERMINATION_CONVERGED = 2,
} MlcTermination;

/**
 * Opaque correlation matrix.
 */
typedef struct MlcCorrelation MlcCorrelation;

/**
 * Opaque GA result.
 */
typedef struct MlcGaResult MlcGaResult;

/**
 * Genetic algorithm settings. Start from [`mlc_ga_config_default`].
 */
typedef struct MlcGaConfig {
  size_t population_size;
  size_t max_generations;
  double p_crossover;
  double p_mutation;
  double error_tolerance;
  size_t stall_generations;
  size_t elite_size;
  double p_knowledge_crossover;
  uint64_t seed;
  size_t workers;
} MlcGaConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *mlc_last_error(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *mlc_version(void);

/**
 * Builds a correlation matrix from `n * n` row-major values.
 *
 * # Safety
 * `values` must point to `n * n` readable doubles and `out` to a writable handle slot.
 */
enum MlcStatus mlc_correlation_new(size_t n, const double *values, struct MlcCorrelation **out);

/**
 * # Safety
 * `c` must be null or a handle from this library not yet freed.
 */
void mlc_correlation_free(struct MlcCorrelation *c);

/**
 * Number of assets, or 0 for a null handle.
 *
 * # Safety
 * `c` must be null or a live handle.
 */
size_t mlc_correlation_size(const struct MlcCorrelation *c);

/**
 * Copies the `n * n` row-major values into `out`.
 *
 * # Safety
 * `c` must be a live handle and `out` must hold `len` writable doubles.
 */
enum MlcStatus mlc_correlation_values(const struct MlcCorrelation *c, double *out, size_t len);

/**
 * Log-likelihood of the partition given by `labels` (values in `1..=n`).
 *
 * # Safety
 * `c` must be a live handle, `labels` must hold `n` values and `out` be writable.
 */
enum MlcStatus mlc_log_likelihood(const struct MlcCorrelation *c,
                                  const uint32_t *labels,
                                  size_t n,
                                  double *out);

/**
 * Default settings.
 */
struct MlcGaConfig mlc_ga_config_default(void);

/**
 * Runs the genetic algorithm. A null `cfg` means default settings.
 *
 * # Safety
 * `c` must be a live handle, `cfg` null or readable, `out` a writable handle slot.
 */
enum MlcStatus mlc_evolve(const struct MlcCorrelation *c,
                          const struct MlcGaConfig *cfg,
                          struct MlcGaResult **out);

/**
 * # Safety
 * `r` must be null or a live result handle.
 */
void mlc_result_free(struct MlcGaResult *r);

/**
 * Best fitness, or NaN for a null handle.
 *
 * # Safety
 * `r` must be null or a live result handle.
 */
double mlc_result_fitness(const struct MlcGaResult *r);

/**
 * Generations run, or 0 for a null handle.
 *
 * # Safety
 * `r` must be null or a live result handle.
 */
size_t mlc_result_generations(const struct MlcGaResult *r);

/**
 * Why the run stopped.
 *
 * # Safety
 * `r` must be a live result handle.
 */
enum MlcStatus mlc_result_termination(const struct MlcGaResult *r, enum MlcTermination *out);

/**
 * Copies the best partition's canonical labels into `out`.
 *
 * # Safety
 * `r` must be a live result handle and `out` hold `len` writable values.
 */
enum MlcStatus mlc_result_labels(const struct MlcGaResult *r, uint32_t *out, size_t len);

/**
 * Exhaustive maximum (at most 12 assets). Writes `n` labels and the fitness.
 *
 * # Safety
 * `c` must be a live handle, `labels` hold `len` writable values, `fitness` be writable.
 */
enum MlcStatus mlc_brute_force(const struct MlcCorrelation *c,
                               uint32_t *labels,
                               size_t len,
                               double *fitness);

/**
 * Random-matrix cleaning with ratio `q = N / D`; writes a new handle.
 *
 * # Safety
 * `c` must be a live handle and `out` a writable handle slot.
 */
enum MlcStatus mlc_rmt_clean(const struct MlcCorrelation *c, double q, struct MlcCorrelation **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MLCLUST_H */
