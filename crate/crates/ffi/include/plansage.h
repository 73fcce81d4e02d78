#ifndef PLANSAGE_H
#define PLANSAGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every call.
 */
typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_ARGUMENT = 1,
  PS_STATUS_INVALID_UTF8 = 2,
  PS_STATUS_IO_ERROR = 3,
  PS_STATUS_MALFORMED_FILE = 4,
  PS_STATUS_SCHEMA_VIOLATION = 5,
  PS_STATUS_EMPTY_CATALOG = 6,
  PS_STATUS_INVALID_REQUEST = 7,
  PS_STATUS_EMPTY_PREFERENCE = 8,
  PS_STATUS_ZERO_VECTOR = 9,
  PS_STATUS_DIMENSION_MISMATCH = 10,
  PS_STATUS_INVALID_ARGUMENT = 11,
  PS_STATUS_PANIC = 99,
} PsStatus;

/**
 * Opaque engine handle.
 */
typedef struct PsEngine PsEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads a catalog and ratings file into a new engine.
 *
 * # Safety
 * Paths must be NUL-terminated strings; `out_engine` must be writable.
 */
enum PsStatus ps_engine_open(const char *catalog_path,
                             const char *ratings_path,
                             struct PsEngine **out_engine);

/**
 * Releases an engine. NULL is ignored.
 *
 * # Safety
 * `engine` must come from [`ps_engine_open`] and not have been freed.
 */
void ps_engine_free(struct PsEngine *engine);

/**
 * Number of plans loaded; 0 for a NULL engine.
 *
 * # Safety
 * `engine` must be NULL or a live handle.
 */
uintptr_t ps_engine_catalog_size(const struct PsEngine *engine);

/**
 * Writes a newly allocated copy of the snapshot's schema id to `out`.
 *
 * # Safety
 * `engine` must be a live handle; `out` must be writable.
 */
enum PsStatus ps_engine_schema_id(const struct PsEngine *engine, char **out);

/**
 * Runs a recommendation. `request_json` has the HTTP request body shape:
 * `{"preference": {...}, "metric": "cosine"|"knn", "pool_size": n}`.
 *
 * An empty result is `PS_STATUS_OK` with `"code":"no_candidates"` in the payload.
 *
 * # Safety
 * `engine` must be a live handle, `request_json` NUL-terminated, `out_json` writable.
 */
enum PsStatus ps_recommend(const struct PsEngine *engine,
                           const char *request_json,
                           char **out_json);

/**
 * Runs the cosine-vs-KNN agreement harness and writes the JSON report.
 *
 * # Safety
 * `engine` must be a live handle; `out_json` must be writable.
 */
enum PsStatus ps_compare(const struct PsEngine *engine,
                         uint64_t trials,
                         uint64_t seed,
                         char **out_json);

/**
 * Cosine similarity of two `len`-element vectors.
 *
 * # Safety
 * `a` and `b` must each point to `len` readable doubles; `out` must be writable.
 */
enum PsStatus ps_cosine_similarity(const double *a, const double *b, uintptr_t len, double *out);

/**
 * Euclidean distance between two `len`-element vectors.
 *
 * # Safety
 * `a` and `b` must each point to `len` readable doubles; `out` must be writable.
 */
enum PsStatus ps_euclidean_distance(const double *a, const double *b, uintptr_t len, double *out);

/**
 * Frees a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void ps_string_free(char *s);

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next call into this library on the same thread.
 */
const char *ps_last_error(void);

/**
 * Library version, statically allocated.
 */
const char *ps_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLANSAGE_H */
