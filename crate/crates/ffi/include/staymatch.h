#ifndef STAYMATCH_H
#define STAYMATCH_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Input file layout.
 */
typedef enum SmFormat {
  SM_FORMAT_NATIVE = 0,
  SM_FORMAT_SEATTLE = 1,
} SmFormat;

/**
 * Distance used for clustering.
 */
typedef enum SmMetric {
  SM_METRIC_DEGREE_EUCLIDEAN = 0,
  SM_METRIC_METER_PLANAR = 1,
} SmMetric;

typedef enum SmPhase {
  SM_PHASE_IMP = 0,
  SM_PHASE_SMP_ALONG = 1,
  SM_PHASE_SMP_JUNCTION = 2,
} SmPhase;

/**
 * Result code of every fallible call.
 */
typedef enum SmStatus {
  SM_STATUS_OK = 0,
  /**
   * Invalid parameter value.
   */
  SM_STATUS_USAGE = 1,
  /**
   * Unreadable or malformed input.
   */
  SM_STATUS_INPUT = 2,
  /**
   * Input violates a precondition of the operation.
   */
  SM_STATUS_DOMAIN = 3,
  SM_STATUS_NULL_POINTER = 4,
  SM_STATUS_INVALID_UTF8 = 5,
  SM_STATUS_OUT_OF_RANGE = 6,
  /**
   * A bug inside the library; the handle involved should be discarded.
   */
  SM_STATUS_PANIC = 7,
} SmStatus;

/**
 * Matching output handle.
 */
typedef struct SmMatchResult SmMatchResult;

/**
 * Road network handle.
 */
typedef struct SmNetwork SmNetwork;

/**
 * Trajectory handle.
 */
typedef struct SmTrajectory SmTrajectory;

/**
 * One matched fix. The edge id is fetched separately with
 * [`sm_match_result_edge_id`].
 */
typedef struct SmMatchedPoint {
  size_t source_index;
  double offset_m;
  double snapped_lat;
  double snapped_lon;
  double likelihood;
  enum SmPhase phase;
  bool confident;
} SmMatchedPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sm_version(void);

/**
 * Message of the last failed call on this thread, empty after a success.
 * Valid until the next library call on this thread.
 */
const char *sm_last_error_message(void);

/**
 * Loads a road network file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum SmStatus sm_network_load(const char *path, enum SmFormat format, struct SmNetwork **out);

/**
 * # Safety
 * `net` must be null or a live handle from [`sm_network_load`].
 */
size_t sm_network_edge_count(const struct SmNetwork *net);

/**
 * # Safety
 * `net` must be null or a live handle; it is invalid afterwards.
 */
void sm_network_free(struct SmNetwork *net);

/**
 * Loads a trajectory file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum SmStatus sm_trajectory_load(const char *path, enum SmFormat format, struct SmTrajectory **out);

/**
 * Builds a trajectory from parallel arrays of length `len`. Timestamps are
 * seconds and must not decrease.
 *
 * # Safety
 * The three arrays must each hold `len` readable values.
 */
enum SmStatus sm_trajectory_from_arrays(const double *timestamps,
                                        const double *lats,
                                        const double *lons,
                                        size_t len,
                                        struct SmTrajectory **out);

/**
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t sm_trajectory_len(const struct SmTrajectory *traj);

/**
 * Copies record `index` into the out parameters.
 *
 * # Safety
 * `traj` must be a live handle; the out pointers must be writable.
 */
enum SmStatus sm_trajectory_record(const struct SmTrajectory *traj,
                                   size_t index,
                                   double *timestamp,
                                   double *lat,
                                   double *lon);

/**
 * Clusters `traj` with DBSCAN and writes the reduced trajectory to `out`.
 * `cluster_count` may be null.
 *
 * # Safety
 * `traj` must be a live handle and `out` a writable pointer.
 */
enum SmStatus sm_trajectory_reduce(const struct SmTrajectory *traj,
                                   double eps,
                                   size_t min_pts,
                                   enum SmMetric metric,
                                   struct SmTrajectory **out,
                                   size_t *cluster_count);

/**
 * # Safety
 * `traj` must be null or a live handle; it is invalid afterwards.
 */
void sm_trajectory_free(struct SmTrajectory *traj);

/**
 * Map-matches `traj` onto `net`. `config_path` may be null for the
 * built-in thresholds and rule base.
 *
 * # Safety
 * Handles must be live; `config_path` null or NUL-terminated; `out`
 * writable.
 */
enum SmStatus sm_match(const struct SmNetwork *net,
                       const struct SmTrajectory *traj,
                       const char *config_path,
                       struct SmMatchResult **out);

/**
 * Number of matched points.
 *
 * # Safety
 * `res` must be null or a live handle.
 */
size_t sm_match_result_len(const struct SmMatchResult *res);

/**
 * # Safety
 * `res` must be a live handle and `out` writable.
 */
enum SmStatus sm_match_result_point(const struct SmMatchResult *res,
                                    size_t index,
                                    struct SmMatchedPoint *out);

/**
 * Edge id of matched point `index`, or null when out of range.
 *
 * # Safety
 * `res` must be null or a live handle.
 */
const char *sm_match_result_edge_id(const struct SmMatchResult *res, size_t index);

/**
 * Length of the collapsed edge sequence.
 *
 * # Safety
 * `res` must be null or a live handle.
 */
size_t sm_match_result_sequence_len(const struct SmMatchResult *res);

/**
 * Entry `index` of the collapsed edge sequence, or null when out of range.
 *
 * # Safety
 * `res` must be null or a live handle.
 */
const char *sm_match_result_sequence_edge(const struct SmMatchResult *res, size_t index);

/**
 * Seconds spent in the matching loop.
 *
 * # Safety
 * `res` must be null or a live handle.
 */
double sm_match_result_wall_time_s(const struct SmMatchResult *res);

/**
 * Counts edges of the matched sequence that appear, in order, in the
 * `truth_len` ids of `truth`.
 *
 * # Safety
 * `res` must be a live handle; `truth` must hold `truth_len` NUL-terminated
 * strings; `out` must be writable.
 */
enum SmStatus sm_match_result_correct_links(const struct SmMatchResult *res,
                                            const char *const *truth,
                                            size_t truth_len,
                                            size_t *out);

/**
 * # Safety
 * `res` must be null or a live handle; it is invalid afterwards.
 */
void sm_match_result_free(struct SmMatchResult *res);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STAYMATCH_H */
