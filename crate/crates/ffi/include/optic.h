#ifndef OPTIC_H
#define OPTIC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OpticStatus {
  OPTIC_STATUS_OK = 0,
  OPTIC_STATUS_NULL_POINTER = 1,
  OPTIC_STATUS_INVALID_UTF8 = 2,
  OPTIC_STATUS_IO = 3,
  OPTIC_STATUS_INVALID_MODEL = 4,
  OPTIC_STATUS_INVALID_ARGUMENT = 5,
  OPTIC_STATUS_PARSE_FAILURE = 6,
  OPTIC_STATUS_PANIC = 7,
} OpticStatus;

typedef enum OpticLabel {
  OPTIC_LABEL_ADMIN = 0,
  OPTIC_LABEL_CLINICAL = 1,
} OpticLabel;

// Opaque handle to a loaded student model.
typedef struct OpticModel OpticModel;

// Metrics with the positive class given by the caller. Slots that are
// undefined for the input (a zero denominator) hold NaN.
typedef struct OpticMetrics {
  uint64_t tp;
  uint64_t fp;
  uint64_t fn_;
  uint64_t tn;
  double accuracy;
  double sensitivity;
  double specificity;
  double precision;
  double f1;
} OpticMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *optic_version(void);

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next call into this library on the same thread.
const char *optic_last_error(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed already.
void optic_string_free(char *s);

// Loads a model file, verifying its checksum and format version.
//
// # Safety
// `path` must be a NUL-terminated string; `out_model` must be writable.
enum OpticStatus optic_model_load(const char *path, struct OpticModel **out_model);

// Releases a model handle. NULL is ignored.
//
// # Safety
// `model` must come from [`optic_model_load`] and not have been freed.
void optic_model_free(struct OpticModel *model);

// Probability that `text` is Clinical.
//
// # Safety
// `model` must be a live handle, `text` NUL-terminated, `out_score` writable.
enum OpticStatus optic_model_score(const struct OpticModel *model,
                                   const char *text,
                                   double *out_score);

// Label and score for `text` (Clinical when the score is at least 0.5).
// `out_score` may be NULL.
//
// # Safety
// As for [`optic_model_score`]; `out_label` must be writable.
enum OpticStatus optic_model_label(const struct OpticModel *model,
                                   const char *text,
                                   enum OpticLabel *out_label,
                                   double *out_score);

// Model version string (`<format>+<fingerprint prefix>`), caller-owned.
//
// # Safety
// `model` must be a live handle; `out_version` must be writable.
enum OpticStatus optic_model_version(const struct OpticModel *model, char **out_version);

// The normalized classification text for a subject and body.
//
// # Safety
// Inputs must be NUL-terminated; `out_text` must be writable.
enum OpticStatus optic_clean_text(const char *subject, const char *body, char **out_text);

// Full zero-shot prompt for a message, caller-owned.
//
// # Safety
// `message` must be NUL-terminated; `out_prompt` must be writable.
enum OpticStatus optic_render_zero_shot(const char *message, char **out_prompt);

// Reads a teacher response. Returns `ParseFailure` when no label or no
// explanation can be read. `out_explanation` may be NULL; otherwise it
// receives a caller-owned string.
//
// # Safety
// `raw` must be NUL-terminated; `out_label` must be writable.
enum OpticStatus optic_parse_verdict(const char *raw,
                                     enum OpticLabel *out_label,
                                     char **out_explanation);

// Confusion counts and metrics for `n` paired predictions and gold labels,
// given as `OpticLabel` values.
//
// # Safety
// `predictions` and `golds` must each point to `n` labels; `out_metrics`
// must be writable.
enum OpticStatus optic_metrics(const int32_t *predictions,
                               const int32_t *golds,
                               size_t n,
                               int32_t positive,
                               struct OpticMetrics *out_metrics);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPTIC_H */
