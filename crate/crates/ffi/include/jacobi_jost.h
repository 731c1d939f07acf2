#ifndef JACOBI_JOST_H
#define JACOBI_JOST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum JjCell {
  JJ_CELL_NON_CRITICAL_REGULAR = 0,
  JJ_CELL_NON_CRITICAL_SINGULAR = 1,
  JJ_CELL_CRITICAL_REGULAR = 2,
  JJ_CELL_CRITICAL_SINGULAR_SUB = 3,
  JJ_CELL_CRITICAL_SINGULAR_SUPER = 4,
  JJ_CELL_DOUBLY_CRITICAL_REGULAR = 5,
  JJ_CELL_DOUBLY_CRITICAL_SINGULAR = 6,
} JjCell;

typedef enum JjStatus {
  JJ_STATUS_OK = 0,
  JJ_STATUS_NULL_POINTER = 1,
  JJ_STATUS_INVALID_PARAMETER = 2,
  JJ_STATUS_UNSUPPORTED = 3,
  JJ_STATUS_HORIZON_TOO_SMALL = 4,
  JJ_STATUS_UNRESOLVED_SPECTRUM = 5,
  JJ_STATUS_VERIFICATION_FAILED = 6,
  JJ_STATUS_DOMAIN = 7,
  JJ_STATUS_RANGE = 8,
  JJ_STATUS_DEGENERATE = 9,
  JJ_STATUS_COST_CAP = 10,
  JJ_STATUS_OUT_OF_RANGE = 11,
  JJ_STATUS_IO = 12,
  JJ_STATUS_BUFFER_TOO_SMALL = 13,
  JJ_STATUS_PANIC = 99,
} JjStatus;

/**
 * Opaque coefficient model.
 */
typedef struct JjModel JjModel;

/**
 * Opaque solution sequence with an optional Ω(z).
 */
typedef struct JjSeq JjSeq;

typedef struct JjClassification {
  double gamma;
  int32_t nu;
  double sigma;
  double alpha;
  double beta;
  double tau;
  double s;
  double delta;
  double varrho;
  enum JjCell cell;
} JjClassification;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to fit). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must point to `len` writable bytes or be null.
 */
size_t jj_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *jj_version(void);

/**
 * Build a model from a JSON config (same schema as the CLI).
 *
 * # Safety
 * `json` must be a valid NUL-terminated string; `out` must be writable.
 */
enum JjStatus jj_model_from_json(const char *json, struct JjModel **out);

/**
 * # Safety
 * `m` must come from `jj_model_from_json` and not be used afterwards.
 */
void jj_model_free(struct JjModel *m);

/**
 * # Safety
 * `m` must be a live model handle; `out` must be writable.
 */
enum JjStatus jj_classify(const struct JjModel *m, struct JjClassification *out);

/**
 * P_0..=P_{n_max} at z = re + i·im.
 *
 * # Safety
 * `m` must be a live model handle; `out` must be writable.
 */
enum JjStatus jj_polynomials(const struct JjModel *m,
                             double re,
                             double im,
                             size_t n_max,
                             struct JjSeq **out);

/**
 * Jost solution f_{−1..} at z to tolerance `tol`, stored at least to n_max.
 *
 * # Safety
 * `m` must be a live model handle; `out` must be writable.
 */
enum JjStatus jj_jost_solution(const struct JjModel *m,
                               double re,
                               double im,
                               double tol,
                               size_t n_max,
                               struct JjSeq **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void jj_seq_free(struct JjSeq *s);

/**
 * First and last stored index.
 *
 * # Safety
 * `s` must be a live sequence handle; outputs must be writable.
 */
enum JjStatus jj_seq_range(const struct JjSeq *s, int64_t *first, int64_t *last);

/**
 * Entry n as mantissa (re, im) and binary exponent: value = m·2^exp2.
 *
 * # Safety
 * `s` must be a live sequence handle; outputs must be writable.
 */
enum JjStatus jj_seq_get(const struct JjSeq *s, int64_t n, double *re, double *im, int64_t *exp2);

/**
 * Ω(z) of a Jost sequence, log-scaled as in `jj_seq_get`.
 *
 * # Safety
 * `s` must be a live sequence handle; outputs must be writable.
 */
enum JjStatus jj_seq_omega(const struct JjSeq *s, double *re, double *im, int64_t *exp2);

/**
 * Eigenvalues of the leading n×n section in [lo, hi]. `*count` receives
 * the number found even when the buffer is too small.
 *
 * # Safety
 * `m` must be a live model; `out` must hold `cap` doubles; `count` writable.
 */
enum JjStatus jj_truncated_eigs(const struct JjModel *m,
                                size_t n,
                                double lo,
                                double hi,
                                double *out,
                                size_t cap,
                                size_t *count);

/**
 * Zeros of the Jost function in [lo, hi] (supercritical models).
 *
 * # Safety
 * `m` must be a live model; `out` must hold `cap` doubles; `count` writable.
 */
enum JjStatus jj_jost_zeros(const struct JjModel *m,
                            double lo,
                            double hi,
                            size_t grid,
                            double width,
                            double *out,
                            size_t cap,
                            size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JACOBI_JOST_H */
