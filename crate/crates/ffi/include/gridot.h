#ifndef GRIDOT_H
#define GRIDOT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GridotStatus {
  GRIDOT_STATUS_OK = 0,
  GRIDOT_STATUS_NULL_POINTER = 1,
  GRIDOT_STATUS_INVALID_ARGUMENT = 2,
  GRIDOT_STATUS_DIMENSION_MISMATCH = 3,
  GRIDOT_STATUS_OUT_OF_SUPPORT = 4,
  GRIDOT_STATUS_INFEASIBLE = 5,
  GRIDOT_STATUS_INTERNAL = 6,
  GRIDOT_STATUS_IO = 7,
  GRIDOT_STATUS_PANIC = 8,
} GridotStatus;

typedef enum GridotPolicy {
  GRIDOT_POLICY_STANDARD = 0,
  GRIDOT_POLICY_LONGEST_AXIS = 1,
} GridotPolicy;

typedef enum GridotDensityModel {
  GRIDOT_DENSITY_MODEL_UNIFORM = 0,
  GRIDOT_DENSITY_MODEL_LINEAR = 1,
} GridotDensityModel;

/**
 * A set of points of one dimension.
 */
typedef struct GridotSamples GridotSamples;

/**
 * A finished multilevel solve together with its map evaluator.
 */
typedef struct GridotSolution GridotSolution;

/**
 * Solver settings. Obtain defaults from [`gridot_solve_config_default`].
 * `policy` holds a `GridotPolicy` and `density_model` a
 * `GridotDensityModel` value.
 */
typedef struct GridotSolveConfig {
  size_t max_levels;
  size_t n_min;
  uint32_t policy;
  bool neighbor_expansion;
  uint32_t density_model;
  size_t quadrature_order;
} GridotSolveConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *gridot_last_error_message(void);

struct GridotSolveConfig gridot_solve_config_default(void);

/**
 * Copies `n * dim` row-major coordinates into a new sample set.
 *
 * # Safety
 * `coords` must point to `n * dim` readable doubles; `out` must be writable.
 */
enum GridotStatus gridot_samples_new(const double *coords,
                                     size_t n,
                                     size_t dim,
                                     struct GridotSamples **out);

/**
 * # Safety
 * `samples` must be null or a handle from this library.
 */
size_t gridot_samples_len(const struct GridotSamples *samples);

/**
 * # Safety
 * `samples` must be null or a handle from this library.
 */
size_t gridot_samples_dim(const struct GridotSamples *samples);

/**
 * Copies the coordinates into `buffer`, which holds `capacity` doubles.
 *
 * # Safety
 * `buffer` must point to `capacity` writable doubles.
 */
enum GridotStatus gridot_samples_copy(const struct GridotSamples *samples,
                                      double *buffer,
                                      size_t capacity);

/**
 * # Safety
 * `samples` must be null or a handle from this library, not yet freed.
 */
void gridot_samples_free(struct GridotSamples *samples);

/**
 * Multilevel solve from `source` to `target`. A null `config` selects the
 * defaults.
 *
 * # Safety
 * Handles must come from this library; `out` must be writable.
 */
enum GridotStatus gridot_solve(const struct GridotSamples *source,
                               const struct GridotSamples *target,
                               const struct GridotSolveConfig *config,
                               struct GridotSolution **out);

/**
 * Number of levels the solve ran.
 *
 * # Safety
 * `solution` must be null or a handle from this library.
 */
size_t gridot_solution_levels(const struct GridotSolution *solution);

/**
 * Objective of level `level` (0-based).
 *
 * # Safety
 * `solution` must be a handle from this library; `out` must be writable.
 */
enum GridotStatus gridot_solution_objective(const struct GridotSolution *solution,
                                            size_t level,
                                            double *out);

/**
 * Wasserstein-2 distance at the final level.
 *
 * # Safety
 * `solution` must be a handle from this library; `out` must be writable.
 */
enum GridotStatus gridot_solution_wasserstein(const struct GridotSolution *solution, double *out);

/**
 * Evaluates the transport map at one point of dimension `dim`.
 *
 * # Safety
 * `x` and `y` must each point to `dim` doubles.
 */
enum GridotStatus gridot_solution_evaluate(const struct GridotSolution *solution,
                                           const double *x,
                                           size_t dim,
                                           double *y);

/**
 * Pushes every sample through the transport map.
 *
 * # Safety
 * Handles must come from this library; `out` must be writable.
 */
enum GridotStatus gridot_solution_push(const struct GridotSolution *solution,
                                       const struct GridotSamples *samples,
                                       struct GridotSamples **out);

/**
 * # Safety
 * `solution` must be null or a handle from this library, not yet freed.
 */
void gridot_solution_free(struct GridotSolution *solution);

/**
 * Barycenter of `count` sample sets with the given weights, started from
 * the first one.
 *
 * # Safety
 * `marginals` and `weights` must point to `count` entries; `out` must be
 * writable.
 */
enum GridotStatus gridot_barycenter(const struct GridotSamples *const *marginals,
                                    const double *weights,
                                    size_t count,
                                    const struct GridotSolveConfig *config,
                                    size_t max_iters,
                                    double tolerance,
                                    struct GridotSamples **out);

/**
 * Displacement interpolation at `t` in `[0, 1]`.
 *
 * # Safety
 * Handles must come from this library; `out` must be writable.
 */
enum GridotStatus gridot_interpolate(const struct GridotSamples *source,
                                     const struct GridotSamples *target,
                                     double t,
                                     const struct GridotSolveConfig *config,
                                     size_t max_iters,
                                     double tolerance,
                                     struct GridotSamples **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRIDOT_H */
