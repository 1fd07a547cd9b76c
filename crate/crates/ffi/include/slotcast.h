#ifndef SLOTCAST_H
#define SLOTCAST_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlotcastStatus {
  SLOTCAST_STATUS_OK = 0,
  SLOTCAST_STATUS_NULL_ARGUMENT = 1,
  SLOTCAST_STATUS_INVALID_UTF8 = 2,
  SLOTCAST_STATUS_IO = 3,
  SLOTCAST_STATUS_CORRUPT_BUNDLE = 4,
  SLOTCAST_STATUS_VERSION_MISMATCH = 5,
  SLOTCAST_STATUS_INVALID_RECORD = 6,
  SLOTCAST_STATUS_PREDICTION_FAILED = 7,
  SLOTCAST_STATUS_PANIC = 8,
} SlotcastStatus;

typedef enum SlotcastRoute {
  SLOTCAST_ROUTE_SIMPLE = 0,
  SLOTCAST_ROUTE_COMPLEX = 1,
} SlotcastRoute;

/**
 * Opaque loaded model bundle.
 */
typedef struct SlotcastBundle SlotcastBundle;

typedef struct SlotcastPrediction {
  /**
   * Predicted slot-minutes, never negative.
   */
  double slot_min;
  /**
   * Raw regressor output in log1p space.
   */
  double log_space_value;
  uint64_t complexity_score;
  enum SlotcastRoute route;
} SlotcastPrediction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads a bundle file. On success `*out` owns a handle that must be
 * released with `slotcast_bundle_free`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SlotcastStatus slotcast_bundle_load(const char *path, struct SlotcastBundle **out);

/**
 * Releases a bundle handle. Null is ignored.
 *
 * # Safety
 * `bundle` must come from `slotcast_bundle_load` and not be used again.
 */
void slotcast_bundle_free(struct SlotcastBundle *bundle);

/**
 * Predicts a bare SQL string with no volume or tenant metadata.
 *
 * # Safety
 * `bundle` must be a live handle, `sql` NUL-terminated, `out` valid.
 */
enum SlotcastStatus slotcast_predict_sql(const struct SlotcastBundle *bundle,
                                         const char *sql,
                                         struct SlotcastPrediction *out);

/**
 * Predicts one record given as a JSON object in the ingest schema.
 *
 * # Safety
 * `bundle` must be a live handle, `json` NUL-terminated, `out` valid.
 */
enum SlotcastStatus slotcast_predict_record_json(const struct SlotcastBundle *bundle,
                                                 const char *json,
                                                 struct SlotcastPrediction *out);

/**
 * Complexity score of `sql` under the default operator weights.
 *
 * # Safety
 * `sql` must be NUL-terminated and `out` valid.
 */
enum SlotcastStatus slotcast_complexity_score(const char *sql, uint64_t *out);

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *slotcast_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *slotcast_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLOTCAST_H */
