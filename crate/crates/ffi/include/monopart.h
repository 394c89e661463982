#ifndef MONOPART_H
#define MONOPART_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MpStatus {
  MP_STATUS_OK = 0,
  MP_STATUS_NULL_POINTER = 1,
  MP_STATUS_INVALID_UTF8 = 2,
  MP_STATUS_PARSE = 3,
  MP_STATUS_INVALID_ARGUMENT = 4,
  MP_STATUS_INTERNAL = 5,
} MpStatus;

// An application graph.
typedef struct MpGraph MpGraph;

// A partition of a graph's classes, with the objective it scored.
typedef struct MpPartition MpPartition;

// Partitioning parameters. `alpha` and `epsilon` are decimal or `p/q`
// strings; NULL selects the default.
typedef struct MpConfig {
  size_t k;
  const char *alpha;
  const char *epsilon;
  uint64_t seed;
  size_t restarts;
} MpConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// Valid until the next `mp_*` call on the same thread.
const char *mp_last_error(void);

// # Safety
// `s` must come from a monopart function and not have been freed.
void mp_string_free(char *s);

// Default configuration for `k` partitions.
struct MpConfig mp_config_default(size_t k);

// Builds a graph from a dependency export (XML or JSON) and an optional
// infrastructure manifest (YAML, may be NULL).
//
// # Safety
// String arguments must be NUL-terminated; `out` must be writable.
enum MpStatus mp_graph_build(const char *deps, const char *manifest, struct MpGraph **out);

// Loads a graph from the JSON written by `monopart ingest`.
//
// # Safety
// `json` must be NUL-terminated; `out` must be writable.
enum MpStatus mp_graph_from_json(const char *json, struct MpGraph **out);

// Number of classes, or 0 for NULL.
//
// # Safety
// `g` must be NULL or a live graph handle.
size_t mp_graph_class_count(const struct MpGraph *g);

// # Safety
// `g` must be NULL or a live graph handle; it is invalid afterwards.
void mp_graph_free(struct MpGraph *g);

// Partitions `g` under `cfg` with the default price table.
//
// # Safety
// `g` must be a live graph handle, `cfg` readable, `out` writable.
enum MpStatus mp_partition(const struct MpGraph *g,
                           const struct MpConfig *cfg,
                           struct MpPartition **out);

// Number of partitions, or 0 for NULL.
//
// # Safety
// `p` must be NULL or a live partition handle.
size_t mp_partition_k(const struct MpPartition *p);

// Partition of the class at `index` (graph order), or -1 when out of range.
//
// # Safety
// `p` must be NULL or a live partition handle.
int64_t mp_partition_part_of(const struct MpPartition *p, size_t index);

// Objective as an exact decimal or `p/q` string; free with `mp_string_free`.
//
// # Safety
// `p` must be NULL or a live partition handle.
char *mp_partition_objective(const struct MpPartition *p);

// Seed of the restart that produced the partition.
//
// # Safety
// `p` must be NULL or a live partition handle.
uint64_t mp_partition_seed(const struct MpPartition *p);

// # Safety
// `p` must be NULL or a live partition handle; it is invalid afterwards.
void mp_partition_free(struct MpPartition *p);

// Newman-Girvan modularity of `p` on `g`, as a double.
//
// # Safety
// Handles must be live; `out` must be writable.
enum MpStatus mp_ngm(const struct MpGraph *g,
                     const struct MpPartition *p,
                     bool weighted,
                     double *out);

// Evaluation report as JSON (rationals as strings). `truth` is an optional
// YAML/JSON `{class: label}` document. Free the result with `mp_string_free`.
//
// # Safety
// Handles must be live; `truth` NULL or NUL-terminated; `out` writable.
enum MpStatus mp_evaluate_json(const struct MpGraph *g,
                               const struct MpPartition *p,
                               const char *truth,
                               char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MONOPART_H */
