#ifndef CROSSPHASE_H
#define CROSSPHASE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CpStatus {
  CP_STATUS_OK = 0,
  CP_STATUS_NULL_POINTER = 1,
  CP_STATUS_INVALID_ARGUMENT = 2,
  CP_STATUS_IO = 3,
  /**
   * The search ended without a solution or overflowed its cap.
   */
  CP_STATUS_SOLVER_FAILURE = 4,
  CP_STATUS_GRID_MISMATCH = 5,
  CP_STATUS_OUT_OF_RANGE = 6,
  CP_STATUS_PANIC = 7,
} CpStatus;

typedef enum CpCandidateMode {
  CP_CANDIDATE_MODE_BALANCED = 0,
  CP_CANDIDATE_MODE_FULL = 1,
} CpCandidateMode;

typedef struct CpPowerGrid CpPowerGrid;

typedef struct CpRetrieval CpRetrieval;

typedef struct CpRingSystem CpRingSystem;

typedef struct CpSpectrumGrid CpSpectrumGrid;

/**
 * Solver settings. Obtain defaults from [`cp_solver_options_default`].
 */
typedef struct CpSolverOptions {
  double phase_tol_deg;
  double null_threshold_rel;
  size_t frontier_cap;
  enum CpCandidateMode candidate_mode;
  /**
   * Fixed ring order; 0 selects the fitted order.
   */
  size_t order;
  /**
   * Field-domain noise standard deviation; negative when unknown.
   */
  double noise_sigma;
} CpSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into the library on this thread.
 */
const char *cp_last_error_message(void);

/**
 * Power grid of `n × n` samples over `[-half_extent, half_extent]²`,
 * row-major with the `u` index first.
 *
 * # Safety
 * `samples` must point to `n * n` readable doubles and `out` must be
 * writable.
 */
enum CpStatus cp_power_grid_new(size_t n,
                                double half_extent,
                                const double *samples,
                                struct CpPowerGrid **out);

/**
 * Reads a real PRG1 file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum CpStatus cp_power_grid_read(const char *path, struct CpPowerGrid **out);

/**
 * Samples per axis.
 *
 * # Safety
 * `grid` must be a live handle and `n` writable.
 */
enum CpStatus cp_power_grid_size(const struct CpPowerGrid *grid, size_t *n);

/**
 * # Safety
 * `grid` must be null or a handle not yet freed.
 */
void cp_power_grid_free(struct CpPowerGrid *grid);

/**
 * Complex grid from interleaved `(re, im)` pairs, row-major with the `u`
 * index first.
 *
 * # Safety
 * `re_im` must point to `2 * n * n` readable doubles and `out` must be
 * writable.
 */
enum CpStatus cp_spectrum_grid_new(size_t n,
                                   double half_extent,
                                   const double *re_im,
                                   struct CpSpectrumGrid **out);

/**
 * Reads a complex PRG1 file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum CpStatus cp_spectrum_grid_read(const char *path, struct CpSpectrumGrid **out);

/**
 * Writes a complex PRG1 file.
 *
 * # Safety
 * `grid` must be a live handle and `path` a NUL-terminated string.
 */
enum CpStatus cp_spectrum_grid_write(const struct CpSpectrumGrid *grid, const char *path);

/**
 * Samples per axis.
 *
 * # Safety
 * `grid` must be a live handle and `n` writable.
 */
enum CpStatus cp_spectrum_grid_size(const struct CpSpectrumGrid *grid, size_t *n);

/**
 * Copies the samples as interleaved `(re, im)` pairs.
 *
 * # Safety
 * `grid` must be a live handle and `re_im` must point to `capacity`
 * writable doubles.
 */
enum CpStatus cp_spectrum_grid_samples(const struct CpSpectrumGrid *grid,
                                       double *re_im,
                                       size_t capacity);

/**
 * Square amplitude of a spectrum.
 *
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
enum CpStatus cp_spectrum_grid_power(const struct CpSpectrumGrid *grid, struct CpPowerGrid **out);

/**
 * NSE of `recovered` against `nominal` over the visible disk after the best
 * constant-phase alignment.
 *
 * # Safety
 * Both grids must be live handles and `nse` writable.
 */
enum CpStatus cp_spectrum_grid_nse(const struct CpSpectrumGrid *nominal,
                                   const struct CpSpectrumGrid *recovered,
                                   double *nse);

/**
 * # Safety
 * `grid` must be null or a handle not yet freed.
 */
void cp_spectrum_grid_free(struct CpSpectrumGrid *grid);

/**
 * Honeycomb of rings of radius `kbar` covering the disk of radius
 * `cover_radius`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CpStatus cp_ring_system_new(double kbar, double cover_radius, struct CpRingSystem **out);

/**
 * Ring and intersection point counts.
 *
 * # Safety
 * `system` must be a live handle; `rings` and `points` writable.
 */
enum CpStatus cp_ring_system_counts(const struct CpRingSystem *system,
                                    size_t *rings,
                                    size_t *points);

/**
 * # Safety
 * `system` must be null or a handle not yet freed.
 */
void cp_ring_system_free(struct CpRingSystem *system);

struct CpSolverOptions cp_solver_options_default(void);

/**
 * Retrieves the spectrum of a source supported in the disk of radius
 * `support_radius` from its square amplitude.
 *
 * # Safety
 * `system` and `power` must be live handles, `options` null (defaults) or
 * readable, and `out` writable.
 */
enum CpStatus cp_retrieve(const struct CpRingSystem *system,
                          const struct CpPowerGrid *power,
                          double support_radius,
                          const struct CpSolverOptions *options,
                          struct CpRetrieval **out);

/**
 * Number of solutions and whether more than two survived.
 *
 * # Safety
 * `retrieval` must be a live handle; `count` and `ambiguous` writable.
 */
enum CpStatus cp_retrieval_solutions(const struct CpRetrieval *retrieval,
                                     size_t *count,
                                     bool *ambiguous);

/**
 * Copy of solution `index` as a new grid handle.
 *
 * # Safety
 * `retrieval` must be a live handle and `out` writable.
 */
enum CpStatus cp_retrieval_solution(const struct CpRetrieval *retrieval,
                                    size_t index,
                                    struct CpSpectrumGrid **out);

/**
 * Frontier size after each step. Writes at most `capacity` values and
 * stores the full length in `len`.
 *
 * # Safety
 * `retrieval` must be a live handle, `trace` null or pointing to `capacity`
 * writable values, and `len` writable.
 */
enum CpStatus cp_retrieval_frontier_trace(const struct CpRetrieval *retrieval,
                                          size_t *trace,
                                          size_t capacity,
                                          size_t *len);

/**
 * # Safety
 * `retrieval` must be null or a handle not yet freed.
 */
void cp_retrieval_free(struct CpRetrieval *retrieval);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CROSSPHASE_H */
