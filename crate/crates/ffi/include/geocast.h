#ifndef GEOCAST_H
#define GEOCAST_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define GEOCAST_STRATEGY_EMPTY_RECT 0

#define GEOCAST_STRATEGY_ORTHO_HP 1

#define GEOCAST_STRATEGY_GEN_HP 2

#define GEOCAST_STRATEGY_K_CLOSEST 3

#define GEOCAST_DISTANCE_L1 0

#define GEOCAST_DISTANCE_L2 1

#define GEOCAST_KNOWLEDGE_FULL 0

#define GEOCAST_KNOWLEDGE_GOSSIP 1

#define GEOCAST_INSERTION_BATCH 0

#define GEOCAST_INSERTION_INCREMENTAL 1

typedef enum GeocastStatus {
  GEOCAST_STATUS_OK = 0,
  GEOCAST_STATUS_NULL_POINTER = 1,
  GEOCAST_STATUS_INVALID_ARGUMENT = 2,
  GEOCAST_STATUS_NON_CONVERGENCE = 3,
  GEOCAST_STATUS_UNKNOWN_PEER = 4,
  GEOCAST_STATUS_IO = 5,
  GEOCAST_STATUS_ASSERTION_FAILED = 6,
  GEOCAST_STATUS_BUFFER_TOO_SMALL = 7,
  GEOCAST_STATUS_INTERNAL = 8,
} GeocastStatus;

/**
 * Converged overlay.
 */
typedef struct GeocastOverlay GeocastOverlay;

/**
 * Preferred-neighbour tree built over a lifetime-embedded overlay.
 */
typedef struct GeocastStabilityTree GeocastStabilityTree;

/**
 * Multicast tree built over an overlay.
 */
typedef struct GeocastTree GeocastTree;

/**
 * Parameters for [`geocast_overlay_new`]. Start from [`geocast_overlay_config_default`].
 */
typedef struct GeocastOverlayConfig {
  uint32_t n;
  uint32_t d;
  double vmax;
  uint64_t seed;
  uint32_t strategy;
  uint32_t k;
  uint32_t distance;
  uint32_t knowledge;
  uint32_t insertion;
  uint32_t br;
  uint32_t freshness_rounds;
  /**
   * 0 means 10 x n.
   */
  uint32_t max_rounds;
  /**
   * Draw lifetimes and embed them in coordinate `time_coord_index`.
   */
  bool with_lifetimes;
  uint32_t time_coord_index;
} GeocastOverlayConfig;

typedef struct GeocastTopologyMetrics {
  size_t max_degree;
  double avg_degree;
  size_t convergence_rounds;
} GeocastTopologyMetrics;

typedef struct GeocastTreeMetrics {
  size_t messages_sent;
  size_t duplicates;
  size_t unreached;
  size_t max_tree_degree;
  size_t children_max;
  size_t longest_root_leaf_hops;
  size_t diameter_hops;
} GeocastTreeMetrics;

typedef struct GeocastStabilitySummary {
  bool is_single_tree;
  size_t root_candidates;
  size_t components;
  size_t largest_component;
  bool monotone;
  size_t max_degree;
  size_t diameter;
  size_t disconnections;
} GeocastStabilitySummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the next failing call on the same thread.
 */
const char *geocast_last_error(void);

struct GeocastOverlayConfig geocast_overlay_config_default(void);

/**
 * Generates `config.n` peers and converges their overlay. Peer ids are `0..n`.
 *
 * # Safety
 * `config` must point to a valid config and `out` to writable storage for one pointer.
 */
enum GeocastStatus geocast_overlay_new(const struct GeocastOverlayConfig *config,
                                       struct GeocastOverlay **out);

/**
 * # Safety
 * `overlay` must be null or a handle from [`geocast_overlay_new`] not yet freed.
 */
void geocast_overlay_free(struct GeocastOverlay *overlay);

/**
 * Peer count; 0 for a null handle.
 *
 * # Safety
 * `overlay` must be null or a live handle.
 */
size_t geocast_overlay_len(const struct GeocastOverlay *overlay);

/**
 * # Safety
 * `overlay` must be a live handle and `out` writable.
 */
enum GeocastStatus geocast_overlay_metrics(const struct GeocastOverlay *overlay,
                                           struct GeocastTopologyMetrics *out);

/**
 * Out-neighbour ids of `peer`, ascending. Call with `cap = 0` to query the length.
 *
 * # Safety
 * `overlay` must be a live handle, `buf` valid for `cap` writes, `len` writable.
 */
enum GeocastStatus geocast_overlay_neighbors(const struct GeocastOverlay *overlay,
                                             uint32_t peer,
                                             uint32_t *buf,
                                             size_t cap,
                                             size_t *len);

/**
 * Coordinates of `peer`, one value per dimension.
 *
 * # Safety
 * `overlay` must be a live handle, `buf` valid for `cap` writes, `len` writable.
 */
enum GeocastStatus geocast_overlay_coord(const struct GeocastOverlay *overlay,
                                         uint32_t peer,
                                         double *buf,
                                         size_t cap,
                                         size_t *len);

/**
 * Builds the multicast tree rooted at `root`.
 *
 * # Safety
 * `overlay` must be a live handle and `out` writable.
 */
enum GeocastStatus geocast_tree_build(const struct GeocastOverlay *overlay,
                                      uint32_t root,
                                      struct GeocastTree **out);

/**
 * # Safety
 * `tree` must be null or a live handle.
 */
void geocast_tree_free(struct GeocastTree *tree);

/**
 * # Safety
 * `tree` must be a live handle and `out` writable.
 */
enum GeocastStatus geocast_tree_metrics(const struct GeocastTree *tree,
                                        struct GeocastTreeMetrics *out);

/**
 * Parent of `peer` in the tree. `has_parent` is false for the root and for unreached peers.
 *
 * # Safety
 * `tree` must be a live handle; `parent` and `has_parent` writable.
 */
enum GeocastStatus geocast_tree_parent(const struct GeocastTree *tree,
                                       uint32_t peer,
                                       uint32_t *parent,
                                       bool *has_parent);

/**
 * Builds the preferred-neighbour tree. The overlay should have been created `with_lifetimes`.
 *
 * # Safety
 * `overlay` must be a live handle and `out` writable.
 */
enum GeocastStatus geocast_stability_build(const struct GeocastOverlay *overlay,
                                           struct GeocastStabilityTree **out);

/**
 * # Safety
 * `tree` must be null or a live handle.
 */
void geocast_stability_free(struct GeocastStabilityTree *tree);

/**
 * Tree shape, monotonicity check and departure simulation in one summary.
 *
 * # Safety
 * `tree` must be a live handle and `out` writable.
 */
enum GeocastStatus geocast_stability_summary(const struct GeocastStabilityTree *tree,
                                             struct GeocastStabilitySummary *out);

/**
 * Runs an experiment described by a JSON config (same keys as the command-line config file).
 * Writes the CSV text and JSON report to `out_csv` and `out_report`; release both with
 * [`geocast_string_free`]. Returns `AssertionFailed` (with outputs set) when an embedded check fails.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out_csv` and `out_report` writable.
 */
enum GeocastStatus geocast_run_experiment(const char *config_json,
                                          char **out_csv,
                                          char **out_report);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void geocast_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GEOCAST_H */
