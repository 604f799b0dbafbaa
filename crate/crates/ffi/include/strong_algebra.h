#ifndef STRONG_ALGEBRA_H
#define STRONG_ALGEBRA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Which factor [`sa_factorization_factor`] returns.
 */
typedef enum SaFactor {
  SA_FACTOR_MINUS = 0,
  SA_FACTOR_PLUS = 1,
  SA_FACTOR_MINUS_INVERSE = 2,
  SA_FACTOR_PLUS_INVERSE = 3,
} SaFactor;

/**
 * Status codes. The nonzero error classes match the CLI exit codes.
 */
typedef enum SaStatus {
  SA_STATUS_OK = 0,
  /**
   * Precondition or contraction failure.
   */
  SA_STATUS_PRECONDITION = 2,
  SA_STATUS_NUMERICAL = 3,
  /**
   * I/O, JSON or schema error.
   */
  SA_STATUS_IO = 4,
  SA_STATUS_NULL_POINTER = 5,
  SA_STATUS_INVALID_UTF8 = 6,
  SA_STATUS_PANIC = 7,
} SaStatus;

/**
 * An element of a graded algebra instance.
 */
typedef struct SaElement SaElement;

/**
 * Result of a canonical factorization.
 */
typedef struct SaFactorization SaFactorization;

/**
 * A Wiener-algebra element (Laurent series with algebra coefficients).
 */
typedef struct SaWiener SaWiener;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sa_version(void);

/**
 * Copies the last error message of this thread into `buf` (truncated,
 * always NUL-terminated when `len > 0`). Returns the full message length,
 * or 0 if there is none.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
uintptr_t sa_last_error(char *buf, uintptr_t len);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void sa_string_free(char *s);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum SaStatus sa_element_from_json(const char *json, struct SaElement **out);

/**
 * # Safety
 * `e` must be a live handle; `out` must be writable.
 */
enum SaStatus sa_element_to_json(const struct SaElement *e, char **out);

/**
 * # Safety
 * `e` must be null or a handle not yet freed.
 */
void sa_element_free(struct SaElement *e);

/**
 * Number of stored coefficients.
 *
 * # Safety
 * `e` must be null or a live handle.
 */
uintptr_t sa_element_len(const struct SaElement *e);

/**
 * Writes coefficient `i` as `(re, im)`.
 *
 * # Safety
 * `e` must be a live handle; `re` and `im` must be writable.
 */
enum SaStatus sa_element_coefficient(const struct SaElement *e,
                                     uintptr_t i,
                                     double *re,
                                     double *im);

/**
 * Norm at `grade` (e.g. `"0"`, `"1/2"`), including the tail bound.
 *
 * # Safety
 * `e` must be a live handle, `grade` a NUL-terminated string, `out` writable.
 */
enum SaStatus sa_element_norm(const struct SaElement *e, const char *grade, double *out);

/**
 * # Safety
 * `a`, `b` must be live handles; `out` must be writable.
 */
enum SaStatus sa_element_multiply(const struct SaElement *a,
                                  const struct SaElement *b,
                                  struct SaElement **out);

/**
 * `(1 - a)^{-1}` by its Neumann series. `bound` receives the certified
 * bound on the inverse's norm at `beta`, `distance` the bound on
 * `||1 - (1-a)^{-1}||_beta`; both may be null.
 *
 * # Safety
 * `a` must be a live handle, grades NUL-terminated, `out` writable.
 */
enum SaStatus sa_neumann_inverse(const struct SaElement *a,
                                 const char *alpha,
                                 const char *beta,
                                 double tol,
                                 struct SaElement **out,
                                 double *bound,
                                 double *distance);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum SaStatus sa_wiener_from_json(const char *json, struct SaWiener **out);

/**
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
enum SaStatus sa_wiener_to_json(const struct SaWiener *w, char **out);

/**
 * # Safety
 * `w` must be null or a handle not yet freed.
 */
void sa_wiener_free(struct SaWiener *w);

/**
 * # Safety
 * `w` must be a live handle, `grade` NUL-terminated, `out` writable.
 */
enum SaStatus sa_wiener_norm(const struct SaWiener *w, const char *grade, double *out);

/**
 * # Safety
 * `a`, `b` must be live handles; `out` must be writable.
 */
enum SaStatus sa_wiener_multiply(const struct SaWiener *a,
                                 const struct SaWiener *b,
                                 struct SaWiener **out);

/**
 * Value `a(t) = sum a_n e^{int}` as a new element handle.
 *
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
enum SaStatus sa_wiener_evaluate(const struct SaWiener *w, double t, struct SaElement **out);

/**
 * Stored coefficient `n` as a new element handle (zero outside the window).
 *
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
enum SaStatus sa_wiener_coefficient(const struct SaWiener *w, int64_t n, struct SaElement **out);

/**
 * Left inverse by localization and patching. `residual` (nullable)
 * receives the certified `||a'a - 1||`.
 *
 * # Safety
 * `a` must be a live handle; `out` must be writable.
 */
enum SaStatus sa_wiener_left_inverse(const struct SaWiener *a,
                                     uintptr_t half_width,
                                     double tol,
                                     struct SaWiener **out,
                                     double *residual);

/**
 * Canonical factorization `a = a_- a_+` at grade `grade`.
 *
 * # Safety
 * `a` must be a live handle, `grade` NUL-terminated, `out` writable.
 */
enum SaStatus sa_factorize(const struct SaWiener *a,
                           const char *grade,
                           double tol,
                           struct SaFactorization **out);

/**
 * Copies one factor out as a new handle.
 *
 * # Safety
 * `f` must be a live handle; `out` must be writable.
 */
enum SaStatus sa_factorization_factor(const struct SaFactorization *f,
                                      enum SaFactor which,
                                      struct SaWiener **out);

/**
 * `||a - a_- a_+||` including tails, or NaN for a null handle.
 *
 * # Safety
 * `f` must be null or a live handle.
 */
double sa_factorization_residual(const struct SaFactorization *f);

/**
 * # Safety
 * `f` must be null or a handle not yet freed.
 */
void sa_factorization_free(struct SaFactorization *f);

/**
 * Runs an experiment config (JSON text) the way the CLI does; input paths
 * resolve against `base_dir` (nullable: current directory). The report is
 * returned even when the task fails; `exit_code` (nullable) receives the
 * CLI exit code.
 *
 * # Safety
 * Strings must be NUL-terminated; `report` must be writable.
 */
enum SaStatus sa_run_config(const char *config_json,
                            const char *base_dir,
                            char **report,
                            int *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STRONG_ALGEBRA_H */
