#ifndef QHMETRIC_H
#define QHMETRIC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QhStatus {
  QH_STATUS_OK = 0,
  QH_STATUS_NULL_POINTER = 1,
  QH_STATUS_INVALID_UTF8 = 2,
  QH_STATUS_PARSE = 3,
  QH_STATUS_INVALID_DOMAIN = 4,
  QH_STATUS_INVALID_MAP = 5,
  QH_STATUS_INVALID_PARAMETER = 6,
  QH_STATUS_OUTSIDE_DOMAIN = 7,
  QH_STATUS_NO_PATH = 8,
  QH_STATUS_BRANCH = 9,
  QH_STATUS_UNSUPPORTED = 10,
  QH_STATUS_PANIC = 11,
  QH_STATUS_OTHER = 12,
} QhStatus;

/**
 * Opaque domain handle.
 */
typedef struct QhDomain QhDomain;

/**
 * Opaque map handle.
 */
typedef struct QhMap QhMap;

typedef struct QhPoint {
  double x;
  double y;
} QhPoint;

/**
 * `lower ≤ k_D(x, y) ≤ upper`.
 */
typedef struct QhBracket {
  double lower;
  double upper;
  uint32_t refinement_level;
  /**
   * Set when the value came from a closed form.
   */
  bool exact;
} QhBracket;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library from the same thread.
 */
const char *qh_last_error_message(void);

/**
 * Parses and validates a domain document.
 *
 * # Safety
 * `json` is a nul-terminated string and `out` is writable.
 */
enum QhStatus qh_domain_from_json(const char *json, struct QhDomain **out);

/**
 * # Safety
 * `d` is null or a handle from [`qh_domain_from_json`] not yet freed.
 */
void qh_domain_free(struct QhDomain *d);

/**
 * # Safety
 * `d` is a live domain handle and `out` is writable.
 */
enum QhStatus qh_domain_contains(const struct QhDomain *d, struct QhPoint p, bool *out);

/**
 * # Safety
 * `d` is a live domain handle and `out` is writable.
 */
enum QhStatus qh_domain_boundary_distance(const struct QhDomain *d, struct QhPoint p, double *out);

/**
 * # Safety
 * `d` is a live domain handle and `out` is writable.
 */
enum QhStatus qh_j_distance(const struct QhDomain *d,
                            struct QhPoint x,
                            struct QhPoint y,
                            double *out);

/**
 * Quasihyperbolic distance bracket with the default solver settings.
 *
 * # Safety
 * `d` is a live domain handle and `out` is writable.
 */
enum QhStatus qh_k_distance(const struct QhDomain *d,
                            struct QhPoint x,
                            struct QhPoint y,
                            struct QhBracket *out);

/**
 * Parses and validates a map document.
 *
 * # Safety
 * `json` is a nul-terminated string and `out` is writable.
 */
enum QhStatus qh_map_from_json(const char *json, struct QhMap **out);

/**
 * # Safety
 * `m` is null or a handle from [`qh_map_from_json`] not yet freed.
 */
void qh_map_free(struct QhMap *m);

/**
 * # Safety
 * `m` is a live map handle and `out` is writable.
 */
enum QhStatus qh_map_apply(const struct QhMap *m, struct QhPoint p, struct QhPoint *out);

/**
 * # Safety
 * `m` is a live map handle and `out` is writable.
 */
enum QhStatus qh_map_apply_inverse(const struct QhMap *m, struct QhPoint p, struct QhPoint *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QHMETRIC_H */
