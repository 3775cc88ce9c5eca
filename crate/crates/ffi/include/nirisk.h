/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef NIRISK_H
#define NIRISK_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result of every call.
typedef enum NiriskStatus {
  NIRISK_STATUS_OK = 0,
  // A required pointer argument was null.
  NIRISK_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  NIRISK_STATUS_INVALID_UTF8 = 2,
  // Malformed JSON or an out-of-domain number.
  NIRISK_STATUS_INVALID_ARGUMENT = 3,
  // The model JSON does not describe a valid model.
  NIRISK_STATUS_INVALID_MODEL = 4,
  // Unknown variable or state, or an observed result node.
  NIRISK_STATUS_INVALID_EVIDENCE = 5,
  // The evidence has probability zero under the model.
  NIRISK_STATUS_IMPOSSIBLE_EVIDENCE = 6,
  // An internal error or a caught panic.
  NIRISK_STATUS_INTERNAL = 7,
} NiriskStatus;

// A loaded, validated model.
typedef struct NiriskModel NiriskModel;

// One patient's forward-filter state.
typedef struct NiriskTracker NiriskTracker;

// Classification rate and predictive values of a confusion matrix. A
// predictive value whose denominator is zero has its `has_` flag cleared
// and its value set to NaN.
typedef struct NiriskMetrics {
  double accuracy;
  double ppv;
  double npv;
  bool has_ppv;
  bool has_npv;
} NiriskMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *nirisk_version(void);

// Message of the last failed call on this thread, or null after a
// successful call. Valid until the next call on this thread.
const char *nirisk_last_error(void);

// Loads a model from its JSON text.
//
// # Safety
// `json` must be null or a NUL-terminated string; `out_model` must be null or
// writable.
enum NiriskStatus nirisk_model_from_json(const char *json, struct NiriskModel **out_model);

// The built-in clinical model.
//
// # Safety
// `out_model` must be null or writable.
enum NiriskStatus nirisk_model_default(struct NiriskModel **out_model);

// Releases a model. Null is ignored.
//
// # Safety
// `model` must be null or a handle from this library not yet freed.
void nirisk_model_free(struct NiriskModel *model);

// Serializes the model back to JSON. Free the string with
// [`nirisk_string_free`].
//
// # Safety
// `model` must be a live handle; `out_json` must be null or writable.
enum NiriskStatus nirisk_model_to_json(const struct NiriskModel *model, char **out_json);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void nirisk_string_free(char *s);

// Starts a patient from admission observations, a JSON object mapping
// static variable names to states (null means none).
//
// # Safety
// `model` must be a live handle; `static_json` null or a NUL-terminated
// string; `out_tracker` null or writable.
enum NiriskStatus nirisk_tracker_new(const struct NiriskModel *model,
                                     const char *static_json,
                                     struct NiriskTracker **out_tracker);

// Releases a tracker. Null is ignored.
//
// # Safety
// `tracker` must be null or a handle from this library not yet freed.
void nirisk_tracker_free(struct NiriskTracker *tracker);

// Admission-time risk.
//
// # Safety
// `tracker` must be a live handle; `out_probability` null or writable.
enum NiriskStatus nirisk_tracker_baseline(const struct NiriskTracker *tracker,
                                          double *out_probability);

// Absorbs the next day's observations (JSON object, null means none) and
// returns that day's risk. On failure the tracker is unchanged.
//
// # Safety
// `tracker` must be a live handle; `day_json` null or a NUL-terminated
// string; `out_probability` null or writable.
enum NiriskStatus nirisk_tracker_advance(struct NiriskTracker *tracker,
                                         const char *day_json,
                                         double *out_probability);

// Risk of the next day under hypothetical observations; the tracker is not
// changed.
//
// # Safety
// As for [`nirisk_tracker_advance`].
enum NiriskStatus nirisk_tracker_peek(const struct NiriskTracker *tracker,
                                      const char *day_json,
                                      double *out_probability);

// Number of days absorbed so far.
//
// # Safety
// `tracker` must be a live handle; `out_day` null or writable.
enum NiriskStatus nirisk_tracker_day(const struct NiriskTracker *tracker, size_t *out_day);

// Whole trajectory of one timeline, `{"static": {...}, "days": [{...}]}`,
// returned as `{"points": [{"day", "probability"}, ...]}`. Free the string
// with [`nirisk_string_free`].
//
// # Safety
// `model` must be a live handle; `timeline_json` a NUL-terminated string;
// `out_json` null or writable.
enum NiriskStatus nirisk_predict_json(const struct NiriskModel *model,
                                      const char *timeline_json,
                                      char **out_json);

// Metrics of a confusion matrix given as cell counts.
//
// # Safety
// `out_metrics` must be null or writable.
enum NiriskStatus nirisk_metrics(uint64_t tn,
                                 uint64_t fp,
                                 uint64_t fn_,
                                 uint64_t tp,
                                 struct NiriskMetrics *out_metrics);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NIRISK_H */
