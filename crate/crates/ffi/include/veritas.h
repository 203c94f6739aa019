#ifndef VERITAS_H
#define VERITAS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum VeritasStatus {
  VERITAS_STATUS_OK = 0,
  VERITAS_STATUS_NULL_POINTER = 1,
  VERITAS_STATUS_INVALID_UTF8 = 2,
  VERITAS_STATUS_INVALID_JSON = 3,
  VERITAS_STATUS_VALIDATION = 4,
  VERITAS_STATUS_IO = 5,
  VERITAS_STATUS_GOLDEN_MISMATCH = 6,
  VERITAS_STATUS_INTERNAL = 7,
} VeritasStatus;

// Opaque pipeline handle. Holds the per-patient decision history, so
// epochs for one patient must be submitted in timestamp order.
typedef struct VeritasPipeline VeritasPipeline;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string. Do not free.
const char *veritas_version(void);

// Copy of the last error message on this thread, or NULL if the last call
// succeeded. Free with `veritas_string_free`.
char *veritas_last_error_message(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must be NULL or a pointer obtained from this library that has not
// been freed yet.
void veritas_string_free(char *s);

// Creates a pipeline. `config_json` is a pipeline config document, or NULL
// for the reference configuration.
//
// # Safety
// `config_json` must be NULL or a valid NUL-terminated string; `out` must
// be a valid pointer.
enum VeritasStatus veritas_pipeline_new(const char *config_json, struct VeritasPipeline **out);

// Destroys a pipeline. NULL is ignored.
//
// # Safety
// `p` must be NULL or a handle from `veritas_pipeline_new` not yet freed.
void veritas_pipeline_free(struct VeritasPipeline *p);

// Runs every epoch in a source bundle through the pipeline.
//
// `bundle_json` is `{"ehr": {...}, "vitals_stream": [...],
// "conversation_log": [...], "patient_reported": [...]}` (the last two
// optional). On success `*out_json` receives a JSON array with one trace
// per distinct epoch timestamp.
//
// # Safety
// `p` must be a live handle, `bundle_json` a valid NUL-terminated string
// and `out_json` a valid pointer.
enum VeritasStatus veritas_pipeline_process(struct VeritasPipeline *p,
                                            const char *bundle_json,
                                            char **out_json);

// Wilson score interval for `successes` out of `n` at normal quantile `z`.
//
// # Safety
// `lower` and `upper` must be valid pointers.
enum VeritasStatus veritas_wilson_interval(uint64_t successes,
                                           uint64_t n,
                                           double z,
                                           double *lower,
                                           double *upper);

// Generates the dataset from the bundled catalogue with `seed`, evaluates
// it at the reference configuration and writes the report JSON to
// `*out_json`. With `golden_check` nonzero the call returns
// `GoldenMismatch` (and still writes the report) when the metrics differ
// from the reference run.
//
// # Safety
// `out_json` must be a valid pointer.
enum VeritasStatus veritas_evaluate_shipped(uint64_t seed, int32_t golden_check, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VERITAS_H */
