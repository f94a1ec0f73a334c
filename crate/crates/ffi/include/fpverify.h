#ifndef FPVERIFY_H
#define FPVERIFY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FpvStatus {
  FPV_STATUS_OK = 0,
  FPV_STATUS_NULL_ARGUMENT = 1,
  FPV_STATUS_INVALID_UTF8 = 2,
  /**
   * The source has parse or type errors.
   */
  FPV_STATUS_SOURCE_ERROR = 3,
  FPV_STATUS_UNKNOWN_FUNCTION = 4,
  FPV_STATUS_BAD_ARGUMENTS = 5,
  /**
   * Evaluation failed at run time.
   */
  FPV_STATUS_RUNTIME_FAILURE = 6,
  FPV_STATUS_NO_SOLVER = 7,
  FPV_STATUS_CONFIG = 8,
  FPV_STATUS_PANIC = 99,
} FpvStatus;

/**
 * A typechecked program.
 */
typedef struct FpvProgram FpvProgram;

/**
 * The outcome of a `check` run.
 */
typedef struct FpvReport FpvReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call into this library on the same thread.
 */
const char *fpv_last_error(void);

/**
 * Library version as a static string.
 */
const char *fpv_version(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void fpv_string_free(char *s);

/**
 * Parses and typechecks `source`; diagnostics go to `fpv_last_error`.
 *
 * # Safety
 * Strings must be NUL-terminated; `out` must be writable.
 */
enum FpvStatus fpv_program_load(const char *name, const char *source, struct FpvProgram **out);

/**
 * # Safety
 * `p` must come from `fpv_program_load` and not have been freed. Null is ignored.
 */
void fpv_program_free(struct FpvProgram *p);

/**
 * Number of functions in the program.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum FpvStatus fpv_program_function_count(const struct FpvProgram *p, size_t *out);

/**
 * Evaluates `function` on comma-separated `args` and returns the value
 * as `decimal [hex]` in `out`, to be freed with `fpv_string_free`.
 *
 * # Safety
 * `p` must be a live handle, strings NUL-terminated, `out` writable.
 */
enum FpvStatus fpv_program_eval(const struct FpvProgram *p,
                                const char *function,
                                const char *args,
                                char **out);

/**
 * Verifies the program. `solvers` is `name:path,...` or null for the
 * default portfolio; `timeout_s` is the per-VC limit.
 *
 * # Safety
 * `p` must be a live handle, `solvers` null or NUL-terminated, `out` writable.
 */
enum FpvStatus fpv_check(const struct FpvProgram *p,
                         const char *solvers,
                         double timeout_s,
                         struct FpvReport **out);

/**
 * Exit code of the run: 0 valid, 1 invalid, 2 inconclusive, 3 tool error.
 *
 * # Safety
 * `r` must be a live handle.
 */
int32_t fpv_report_exit_code(const struct FpvReport *r);

/**
 * The report as JSON, to be freed with `fpv_string_free`.
 *
 * # Safety
 * `r` must be a live handle and `out` writable.
 */
enum FpvStatus fpv_report_json(const struct FpvReport *r, char **out);

/**
 * # Safety
 * `r` must come from `fpv_check` and not have been freed. Null is ignored.
 */
void fpv_report_free(struct FpvReport *r);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* FPVERIFY_H */
