#ifndef STABLE_SDE_H
#define STABLE_SDE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes.
typedef enum SsdeStatus {
  SSDE_STATUS_OK = 0,
  // A null pointer or a string that is not UTF-8.
  SSDE_STATUS_INVALID_ARGUMENT = 1,
  // Parameters or inputs rejected by validation.
  SSDE_STATUS_VALIDATION = 2,
  // I/O or other runtime failure.
  SSDE_STATUS_RUNTIME = 3,
  // An internal panic was caught at the boundary.
  SSDE_STATUS_PANIC = 4,
} SsdeStatus;

// Opaque function specification (an `f` or a `σ`).
typedef struct SsdeFunction SsdeFunction;

// Opaque sampled path skeleton.
typedef struct SsdePath SsdePath;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next call into the library on this thread.
const char *ssde_last_error(void);

// Releases a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void ssde_string_free(char *s);

// Parses a function from JSON or the inline mini-language
// (e.g. `power:|x|^1.5`).
//
// # Safety
// `src` must be a NUL-terminated string; `out` a writable pointer.
enum SsdeStatus ssde_function_parse(const char *src, struct SsdeFunction **out);

// Value of the function at `x` (`+inf` on poles).
//
// # Safety
// `f` must be a live handle; `out` a writable pointer.
enum SsdeStatus ssde_function_eval(const struct SsdeFunction *f, double x, double *out);

// # Safety
// `f` must be null or a handle from [`ssde_function_parse`], not yet freed.
void ssde_function_free(struct SsdeFunction *f);

// Samples a path from `z` on a uniform grid, using random stream
// `(seed, index)`.
//
// # Safety
// `out` must be a writable pointer.
enum SsdeStatus ssde_path_sample(double alpha,
                                 double z,
                                 double horizon,
                                 double step,
                                 uint64_t seed,
                                 uint64_t index,
                                 struct SsdePath **out);

// Number of nodes of the path.
//
// # Safety
// `path` must be a live handle.
size_t ssde_path_len(const struct SsdePath *path);

// Copies up to `cap` node times and values into `times` and `values`
// (either may be null) and returns the number of nodes copied.
//
// # Safety
// `path` must be a live handle; non-null buffers must hold `cap` doubles.
size_t ssde_path_copy(const struct SsdePath *path, double *times, double *values, size_t cap);

// `∫_0^t f(X_s) ds` along the path (`+inf` allowed).
//
// # Safety
// `path` and `f` must be live handles; `out` a writable pointer.
enum SsdeStatus ssde_path_integral(const struct SsdePath *path,
                                   const struct SsdeFunction *f,
                                   double t,
                                   double *out);

// # Safety
// `path` must be null or a handle from [`ssde_path_sample`], not yet freed.
void ssde_path_free(struct SsdePath *path);

// Capacity of the unit ball `[−1, 1]`.
//
// # Safety
// `out` must be a writable pointer.
enum SsdeStatus ssde_unit_ball_capacity(double alpha, double *out);

// Classification report of `dZ = σ(Z−)dX` as JSON.
//
// # Safety
// `sigma` must be a live handle; `out_json` a writable pointer.
enum SsdeStatus ssde_classify_json(double alpha, const struct SsdeFunction *sigma, char **out_json);

// `∫_domain f(y)|z − y|^{α−1} dy` as a JSON verdict. `domain` is a set
// such as `[-1,1)` or `[[0,1],[2,3]]`; null means the whole line.
//
// # Safety
// `f` must be a live handle; `domain` null or a NUL-terminated string;
// `out_json` a writable pointer.
enum SsdeStatus ssde_kernel_integral_json(double alpha,
                                          double z,
                                          const struct SsdeFunction *f,
                                          const char *domain,
                                          double tol,
                                          char **out_json);

// Closed-form test for `σ = |x|^β` as a JSON verdict.
//
// # Safety
// `out_json` must be a writable pointer.
enum SsdeStatus ssde_power_law_test_json(double alpha, double beta, char **out_json);

// Wiener series of the first `n_max` blocks of the example set on dyadic
// shells `1..=n_max`, as JSON.
//
// # Safety
// `out_json` must be a writable pointer.
enum SsdeStatus ssde_wiener_example_json(double alpha, uint32_t n_max, char **out_json);

// Solves by time change on a uniform grid and returns the CSV
// `s,phi,z_value` (with a trailing status line).
//
// # Safety
// `sigma` must be a live handle; `out_csv` a writable pointer.
enum SsdeStatus ssde_solve_csv(double alpha,
                               const struct SsdeFunction *sigma,
                               double z,
                               double horizon,
                               double step,
                               uint64_t seed,
                               char **out_csv);

// Runs an experiment config (JSON object or array) and returns its CSV.
// `threads = 0` uses one worker per core; the output does not depend on it.
//
// # Safety
// `config_json` must be a NUL-terminated string; `out_csv` a writable
// pointer.
enum SsdeStatus ssde_run_experiment_csv(const char *config_json, size_t threads, char **out_csv);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STABLE_SDE_H */
