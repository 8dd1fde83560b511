#ifndef CONIC_ADMM_H
#define CONIC_ADMM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CaError {
  CA_ERROR_OK = 0,
  CA_ERROR_NULL_POINTER = 1,
  CA_ERROR_INVALID_INPUT = 2,
  CA_ERROR_PARSE = 3,
  CA_ERROR_IO = 4,
  CA_ERROR_NUMERICAL = 5,
  CA_ERROR_BUFFER_TOO_SMALL = 6,
  CA_ERROR_PANIC = 7,
} CaError;

typedef enum CaStatus {
  CA_STATUS_CONVERGED = 0,
  CA_STATUS_MAX_ITERS = 1,
  CA_STATUS_STALLED = 2,
} CaStatus;

/**
 * Opaque problem handle.
 */
typedef struct CaProblem CaProblem;

/**
 * Opaque solve result handle.
 */
typedef struct CaResult CaResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length in
 * bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t ca_last_error_message(char *buf, size_t len);

/**
 * Reads a problem file (SDPA, or native for `.native`/`.txt`).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CaError ca_problem_read(const char *path, struct CaProblem **out);

/**
 * Builds a problem from a generator spec such as `biq:n=11,seed=1`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be writable.
 */
enum CaError ca_problem_generate(const char *spec, struct CaProblem **out);

/**
 * # Safety
 * `p` must be null or a handle from this library not yet freed.
 */
void ca_problem_free(struct CaProblem *p);

/**
 * Matrix order `n`, or 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live problem handle.
 */
size_t ca_problem_order(const struct CaProblem *p);

/**
 * # Safety
 * `p` must be null or a live problem handle.
 */
size_t ca_problem_num_eq(const struct CaProblem *p);

/**
 * # Safety
 * `p` must be null or a live problem handle.
 */
size_t ca_problem_num_ineq(const struct CaProblem *p);

/**
 * Solves `p`. `solver` may be null for the default; `tol <= 0` and
 * `max_iters == 0` select the defaults for the problem.
 *
 * # Safety
 * `p` must be a live problem handle, `solver` null or NUL-terminated, and
 * `out` writable.
 */
enum CaError ca_solve(const struct CaProblem *p,
                      const char *solver,
                      double tol,
                      size_t max_iters,
                      struct CaResult **out);

/**
 * # Safety
 * `r` must be null or a result handle not yet freed.
 */
void ca_result_free(struct CaResult *r);

/**
 * # Safety
 * `r` must be a live result handle.
 */
enum CaStatus ca_result_status(const struct CaResult *r);

/**
 * # Safety
 * `r` must be null or a live result handle.
 */
size_t ca_result_iterations(const struct CaResult *r);

/**
 * Final KKT residual; NaN for a null handle.
 *
 * # Safety
 * `r` must be null or a live result handle.
 */
double ca_result_eta(const struct CaResult *r);

/**
 * Relative duality gap; NaN for a null handle.
 *
 * # Safety
 * `r` must be null or a live result handle.
 */
double ca_result_gap(const struct CaResult *r);

/**
 * Objective in the problem's own sense; NaN for a null handle.
 *
 * # Safety
 * `r` must be null or a live result handle.
 */
double ca_result_objective(const struct CaResult *r);

/**
 * Copies the primal matrix, column-major, into `buf` of `len` doubles.
 *
 * # Safety
 * `r` must be a live result handle and `buf` valid for `len` doubles.
 */
enum CaError ca_result_x(const struct CaResult *r, double *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ca_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONIC_ADMM_H */
