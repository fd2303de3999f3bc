#ifndef DDFEM_H
#define DDFEM_H

/* Generated by cbindgen from the ddfem-ffi sources; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define DDFEM_OK 0

#define DDFEM_ERR_INVALID_ARGUMENT 1

#define DDFEM_ERR_OUT_OF_RANGE 2

#define DDFEM_ERR_DIMENSION_MISMATCH 3

#define DDFEM_ERR_EMPTY_DATA 4

#define DDFEM_ERR_FORMAT 5

#define DDFEM_ERR_IO 6

#define DDFEM_ERR_SIZE_GUARD 7

#define DDFEM_ERR_FACTORIZATION 8

#define DDFEM_ERR_NEWTON 9

#define DDFEM_ERR_NULL_POINTER 10

#define DDFEM_ERR_PANIC 11

#define DDFEM_LAW_FOURIER 0

#define DDFEM_LAW_ARCTAN 1

#define DDFEM_SAMPLING_GRID 0

#define DDFEM_SAMPLING_UNIFORM 1

#define DDFEM_ALGORITHM_PG 0

#define DDFEM_ALGORITHM_PS 1

#define DDFEM_ALGORITHM_DR1 2

#define DDFEM_ALGORITHM_DR2 3

/**
 * A material data set.
 */
typedef struct DdfemDataSet DdfemDataSet;

/**
 * A mesh with its equilibrium projector for the manufactured problem.
 */
typedef struct DdfemProblem DdfemProblem;

/**
 * Result of a solver run.
 */
typedef struct DdfemReport DdfemReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library from this thread.
 */
const char *ddfem_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *ddfem_version(void);

/**
 * Samples `m` points of `law` (`m` must be a perfect square for grid
 * sampling) with uniform noise in `[-noise, noise]^4`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
int ddfem_dataset_generate(int law_code,
                           int sampling,
                           size_t m,
                           double noise,
                           uint64_t seed,
                           struct DdfemDataSet **out);

/**
 * Creates a data set from `m` rows `(r1, r2, w1, w2)` stored contiguously.
 *
 * # Safety
 * `points` must point to `4 * m` doubles; `out` must be valid.
 */
int ddfem_dataset_from_points(const double *points, size_t m, struct DdfemDataSet **out);

/**
 * # Safety
 * `path` must be a nul-terminated string; `out` must be valid.
 */
int ddfem_dataset_load(const char *path, struct DdfemDataSet **out);

/**
 * # Safety
 * `data` must be a live handle and `path` a nul-terminated string.
 */
int ddfem_dataset_save(const struct DdfemDataSet *data, const char *path);

/**
 * # Safety
 * `data` must be a live handle; `out` must be valid.
 */
int ddfem_dataset_len(const struct DdfemDataSet *data, size_t *out);

/**
 * Copies point `j` as `(r1, r2, w1, w2)` into `out[0..4]`.
 *
 * # Safety
 * `data` must be a live handle; `out` must hold four doubles.
 */
int ddfem_dataset_point(const struct DdfemDataSet *data, size_t j, double *out);

/**
 * # Safety
 * `data` must be null or a handle not freed before.
 */
void ddfem_dataset_free(struct DdfemDataSet *data);

/**
 * Mesh of `2 n^2` triangles with the manufactured source of `law`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
int ddfem_problem_new(size_t n, int law_code, struct DdfemProblem **out);

/**
 * # Safety
 * `problem` must be a live handle; `out` must be valid.
 */
int ddfem_problem_num_elements(const struct DdfemProblem *problem, size_t *out);

/**
 * Objective `1/2 |pi_E(y) - y|_Z^2` of the field assigning data point
 * `assignment[t]` to element `t`.
 *
 * # Safety
 * Handles must be live; `assignment` must hold `len` entries.
 */
int ddfem_objective(const struct DdfemProblem *problem,
                    const struct DdfemDataSet *data,
                    const size_t *assignment,
                    size_t len,
                    double *out);

/**
 * # Safety
 * `problem` must be a live handle.
 */
void ddfem_problem_free(struct DdfemProblem *problem);

/**
 * Runs a solver from the zero field. `gamma0 <= 0` and `max_iter == 0`
 * select the defaults.
 *
 * # Safety
 * Handles must be live; `out` must be valid.
 */
int ddfem_solve(const struct DdfemProblem *problem,
                const struct DdfemDataSet *data,
                int algorithm,
                double gamma0,
                size_t max_iter,
                struct DdfemReport **out);

/**
 * # Safety
 * `report` must be a live handle; `out` must be valid.
 */
int ddfem_report_objective(const struct DdfemReport *report, double *out);

/**
 * # Safety
 * `report` must be a live handle; `out` must be valid.
 */
int ddfem_report_iterations(const struct DdfemReport *report, size_t *out);

/**
 * Relative `L^2` and `H^1_0` errors of the potential against the
 * manufactured solution.
 *
 * # Safety
 * `report` must be a live handle; both outputs must be valid.
 */
int ddfem_report_errors(const struct DdfemReport *report, double *err_l2, double *err_h1);

/**
 * Copies up to `cap` history values into `buf`; `len` receives the full
 * history length. `buf` may be null when `cap == 0`.
 *
 * # Safety
 * `report` must be a live handle; `buf` must hold `cap` doubles.
 */
int ddfem_report_history(const struct DdfemReport *report, double *buf, size_t cap, size_t *len);

/**
 * Copies up to `cap` entries of the final assignment into `buf`; `len`
 * receives the number of elements.
 *
 * # Safety
 * `report` must be a live handle; `buf` must hold `cap` entries.
 */
int ddfem_report_assignment(const struct DdfemReport *report, size_t *buf, size_t cap, size_t *len);

/**
 * # Safety
 * `report` must be null or a handle not freed before.
 */
void ddfem_report_free(struct DdfemReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DDFEM_H */
