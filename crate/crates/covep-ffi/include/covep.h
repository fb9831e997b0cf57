#ifndef COVEP_H
#define COVEP_H

/* Generated by cbindgen from covep-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes mirroring the process exit codes of the covep binary.
typedef enum CovepStatus {
  // success
  COVEP_OK = 0,
  // numeric failure (non-flat input, divergence, solver stall)
  COVEP_NUMERIC_ERROR = 1,
  // invalid input (config, CSV, unknown group, log outside its domain)
  COVEP_INPUT_ERROR = 2,
  // a required pointer argument was null
  COVEP_NULL_POINTER = 3,
  // an internal invariant was violated
  COVEP_PANIC = 4,
} CovepStatus;

// Opaque handle to a structure group model (group + algebra metric).
typedef struct CovepGroup CovepGroup;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent error on this thread. The pointer stays valid
// until the next failing covep call on the same thread. Never null.
const char *covep_last_error_message(void);

// Create a group model by name: "abelian_r:k", "so3" or "su2", with the
// identity algebra metric. On success writes the handle to `out`.
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum CovepStatus covep_group_new(const char *name, struct CovepGroup **out);

// Create a group model with an explicit algebra metric `h`: a dense
// row-major `m x m` matrix (symmetric positive definite). Pass a null
// pointer and `m = 0` for the identity metric.
//
// # Safety
// `name` must be a NUL-terminated string, `h` null or a valid array of
// `m * m` doubles, and `out` a valid pointer.
enum CovepStatus covep_group_new_with_metric(const char *name,
                                             const double *h,
                                             size_t m,
                                             struct CovepGroup **out);

// Release a group handle. Null is a no-op.
//
// # Safety
// `group` must come from `covep_group_new*` and not be freed twice.
void covep_group_free(struct CovepGroup *group);

// Dimension of the Lie algebra (k, 3, 3).
//
// # Safety
// `group` must be a live handle.
size_t covep_group_algebra_dim(const struct CovepGroup *group);

// Number of doubles in one group-element payload (k, 9, 4).
//
// # Safety
// `group` must be a live handle.
size_t covep_group_payload_len(const struct CovepGroup *group);

// Identity element, written to `out` (payload_len doubles).
//
// # Safety
// Pointers must be valid with the documented lengths.
enum CovepStatus covep_group_identity(const struct CovepGroup *group, double *out);

// Group exponential of the algebra vector `xi` (algebra_dim doubles),
// written to `out` (payload_len doubles).
//
// # Safety
// Pointers must be valid with the documented lengths.
enum CovepStatus covep_group_exp(const struct CovepGroup *group, const double *xi, double *out);

// Principal logarithm of a group element, written to `out`
// (algebra_dim doubles). Fails with a numeric error outside the log domain.
//
// # Safety
// Pointers must be valid with the documented lengths.
enum CovepStatus covep_group_log(const struct CovepGroup *group, const double *g, double *out);

// Group product `a * b`, written to `out` (payload_len doubles).
//
// # Safety
// Pointers must be valid with the documented lengths.
enum CovepStatus covep_group_mul(const struct CovepGroup *group,
                                 const double *a,
                                 const double *b,
                                 double *out);

// Group inverse, written to `out` (payload_len doubles).
//
// # Safety
// Pointers must be valid with the documented lengths.
enum CovepStatus covep_group_inv(const struct CovepGroup *group, const double *g, double *out);

// One classical Euler-Poincare RK4 step: advances the momentum `mu`
// (algebra_dim doubles, updated in place) by `dt` under the group's algebra
// metric as inertia tensor.
//
// # Safety
// Pointers must be valid with the documented lengths.
enum CovepStatus covep_rigid_body_step(const struct CovepGroup *group, double *mu, double dt);

// Run one covep command against a JSON config, exactly like the binary:
// `command` is "reduce", "verify", "rigid-body" or "harmonic"; artifacts are
// written under `out_dir`. On success, `exit_code` receives the process
// exit code the binary would have returned (verify may report failed checks
// through a nonzero exit code while this function still returns CovepOk).
//
// # Safety
// All strings must be NUL-terminated; `exit_code` must be a valid pointer.
enum CovepStatus covep_run(const char *command,
                           const char *config_path,
                           const char *out_dir,
                           int *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COVEP_H */
