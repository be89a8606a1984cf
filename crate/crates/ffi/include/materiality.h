#ifndef MATERIALITY_H
#define MATERIALITY_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MatStatus {
  MAT_STATUS_OK = 0,
  MAT_STATUS_NULL_POINTER = 1,
  MAT_STATUS_INVALID_UTF8 = 2,
  MAT_STATUS_INPUT = 3,
  MAT_STATUS_BUDGET = 4,
  MAT_STATUS_INTERNAL = 5,
} MatStatus;

/**
 * A validated scoped graph.
 */
typedef struct MatGraph MatGraph;

/**
 * A finite structural causal model.
 */
typedef struct MatScm MatScm;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. Valid until the next
 * call on the same thread; never NULL.
 */
const char *mat_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void mat_string_free(char *s);

/**
 * Parses a graph document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum MatStatus mat_graph_from_json(const char *json, struct MatGraph **out);

/**
 * # Safety
 * `g` must be NULL or a handle from [`mat_graph_from_json`], not yet freed.
 */
void mat_graph_free(struct MatGraph *g);

/**
 * Per-edge verdicts as a JSON report.
 *
 * # Safety
 * `g` must be a live graph handle and `out` a writable pointer.
 */
enum MatStatus mat_graph_check(const struct MatGraph *g, char **out);

/**
 * Builds the materiality model for `decision` and `context`. A negative
 * `k_override` uses the computed `k`.
 *
 * # Safety
 * `g` must be a live graph handle, the names NUL-terminated strings and
 * `out` a writable pointer.
 */
enum MatStatus mat_synthesize(const struct MatGraph *g,
                              const char *decision,
                              const char *context,
                              int32_t k_override,
                              struct MatScm **out);

/**
 * Parses a model document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum MatStatus mat_scm_from_json(const char *json, struct MatScm **out);

/**
 * # Safety
 * `m` must be NULL or a model handle from this library, not yet freed.
 */
void mat_scm_free(struct MatScm *m);

/**
 * Serializes a model back to JSON.
 *
 * # Safety
 * `m` must be a live model handle and `out` a writable pointer.
 */
enum MatStatus mat_scm_to_json(const struct MatScm *m, char **out);

/**
 * MEU over deterministic policies with the full scope, as `"p/q"`.
 * `budget` of 0 keeps the default.
 *
 * # Safety
 * `m` must be a live model handle and `out` a writable pointer.
 */
enum MatStatus mat_scm_meu(const struct MatScm *m, uint64_t budget, char **out);

/**
 * Value of `context` for `decision` as a JSON object.
 *
 * # Safety
 * `m` must be a live model handle, the names NUL-terminated strings and
 * `out` a writable pointer.
 */
enum MatStatus mat_scm_voi(const struct MatScm *m,
                           const char *decision,
                           const char *context,
                           char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MATERIALITY_H */
