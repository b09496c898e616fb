#ifndef GELFAND_H
#define GELFAND_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum GelfandStatus {
  GELFAND_STATUS_OK = 0,
  GELFAND_STATUS_NULL_POINTER = 1,
  GELFAND_STATUS_INVALID_ARGUMENT = 2,
  GELFAND_STATUS_CONFIG = 3,
  GELFAND_STATUS_EMPTY_INTERIOR = 4,
  GELFAND_STATUS_NO_ROOT = 5,
  GELFAND_STATUS_MAX_ITER = 6,
  GELFAND_STATUS_NUMERICAL = 7,
  GELFAND_STATUS_IO = 8,
  GELFAND_STATUS_PANIC = 9,
} GelfandStatus;

/**
 * Outcome of an iterative solve, as in the CLI exit codes.
 */
typedef enum GelfandSolveStatus {
  GELFAND_SOLVE_STATUS_CONVERGED = 0,
  GELFAND_SOLVE_STATUS_DIVERGED = 2,
  GELFAND_SOLVE_STATUS_MAX_ITER = 4,
} GelfandSolveStatus;

/**
 * Opaque grid domain.
 */
typedef struct GelfandDomain GelfandDomain;

/**
 * Opaque nodal field bound to the domain it was computed on.
 */
typedef struct GelfandField GelfandField;

typedef struct GelfandSolveSummary {
  enum GelfandSolveStatus status;
  size_t outer_iters;
  double sup_norm;
  double residual_sup;
} GelfandSolveSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into the library on this thread.
 */
const char *gelfand_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gelfand_version(void);

/**
 * Builds a domain from a JSON document such as
 * `{"shape":"ball","center":[0,0],"radius":1,"resolution":64}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out_domain` writable.
 */
enum GelfandStatus gelfand_domain_from_json(const char *json, struct GelfandDomain **out_domain);

/**
 * # Safety
 * `domain` must come from [`gelfand_domain_from_json`] or be null.
 */
void gelfand_domain_free(struct GelfandDomain *domain);

/**
 * Spatial dimension, total node count, interior node count and grid step.
 *
 * # Safety
 * `domain` must be a live handle; each output pointer may be null.
 */
enum GelfandStatus gelfand_domain_info(const struct GelfandDomain *domain,
                                       size_t *dim,
                                       size_t *nodes,
                                       size_t *interior,
                                       double *h);

/**
 * `1/max dist` of the domain.
 *
 * # Safety
 * `domain` must be a live handle and `out_value` writable.
 */
enum GelfandStatus gelfand_lambda1(const struct GelfandDomain *domain, double *out_value);

/**
 * # Safety
 * `field` must come from this library or be null.
 */
void gelfand_field_free(struct GelfandField *field);

/**
 * Number of nodal values (all grid nodes, row-major).
 *
 * # Safety
 * `field` must be a live handle.
 */
size_t gelfand_field_len(const struct GelfandField *field);

/**
 * Copies the nodal values into `buf`, which must hold `len` doubles with
 * `len` at least [`gelfand_field_len`].
 *
 * # Safety
 * `field` must be a live handle and `buf` valid for `len` writes.
 */
enum GelfandStatus gelfand_field_copy(const struct GelfandField *field, double *buf, size_t len);

/**
 * Largest interior value.
 *
 * # Safety
 * `field` must be a live handle.
 */
double gelfand_field_sup(const struct GelfandField *field);

/**
 * Minimal solution of the limit problem at load `lambda`. `config_json` is
 * an optional solver config object (may be null). The field is returned
 * whatever the status; check `summary.status`.
 *
 * # Safety
 * Pointers must be valid; `config_json` may be null.
 */
enum GelfandStatus gelfand_solve_limit(const struct GelfandDomain *domain,
                                       double lambda,
                                       const char *config_json,
                                       struct GelfandField **out_field,
                                       struct GelfandSolveSummary *summary);

/**
 * Extinction threshold by bisection. `lo`/`hi` of zero select the default
 * bracket.
 *
 * # Safety
 * `domain` must be a live handle and `out_value` writable.
 */
enum GelfandStatus gelfand_lambda_max(const struct GelfandDomain *domain,
                                      double lo,
                                      double hi,
                                      double rel_tol,
                                      double *out_value);

/**
 * Roots of `α = Λ e^{α·d_max}`. `count` receives 0, 1 (tangent) or 2;
 * unused outputs are set to NaN.
 *
 * # Safety
 * Output pointers must be writable.
 */
enum GelfandStatus gelfand_cone_roots(double lambda,
                                      double d_max,
                                      uint32_t *count,
                                      double *small,
                                      double *large);

/**
 * p-torsion function: `−Δ_p w = 1`, `w = 0` on the boundary.
 *
 * # Safety
 * `domain` must be a live handle and `out_field` writable.
 */
enum GelfandStatus gelfand_torsion(const struct GelfandDomain *domain,
                                   double p,
                                   struct GelfandField **out_field);

/**
 * Minimal solution of `−Δ_p u = λ e^u`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum GelfandStatus gelfand_solve_p(const struct GelfandDomain *domain,
                                   double p,
                                   double lambda,
                                   struct GelfandField **out_field,
                                   struct GelfandSolveSummary *summary);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GELFAND_H */
