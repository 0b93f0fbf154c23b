/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef MMHOI_GEOM_H
#define MMHOI_GEOM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MhgStatus {
  MHG_STATUS_OK = 0,
  MHG_STATUS_NULL_POINTER = 1,
  MHG_STATUS_INVALID_ARGUMENT = 2,
  MHG_STATUS_IO = 3,
  MHG_STATUS_PARSE = 4,
  MHG_STATUS_DEGENERATE = 5,
  MHG_STATUS_MISMATCH = 6,
  MHG_STATUS_BUFFER_TOO_SMALL = 7,
  MHG_STATUS_PANIC = 8,
} MhgStatus;

/**
 * Opaque mesh handle.
 */
typedef struct MhgMesh MhgMesh;

/**
 * Opaque alignment report handle.
 */
typedef struct MhgReport MhgReport;

/**
 * Opaque scene handle.
 */
typedef struct MhgScene MhgScene;

/**
 * `x ↦ scale·R·x + t`.
 */
typedef struct MhgSimilarity {
  double scale;
  /**
   * Row-major.
   */
  double rotation[9];
  double translation[3];
} MhgSimilarity;

typedef struct MhgIcpResult {
  struct MhgSimilarity transform;
  double rmse;
  uint32_t iterations;
} MhgIcpResult;

typedef struct MhgDualPatch {
  uint32_t main_row;
  uint32_t main_col;
  uint32_t sub_row;
  uint32_t sub_col;
  double main_offset[2];
  double sub_offset[2];
  bool sub_has_interaction;
} MhgDualPatch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *mhg_version(void);

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *mhg_last_error_message(void);

/**
 * Mesh from `count` packed `x, y, z` triples.
 *
 * # Safety
 * `xyz` must point to `3 * count` doubles; `out` must be writable.
 */
enum MhgStatus mhg_mesh_from_vertices(const double *xyz, size_t count, struct MhgMesh **out);

/**
 * Loads an OBJ file (and its `.labels` sidecar when present).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum MhgStatus mhg_mesh_load(const char *path, struct MhgMesh **out);

/**
 * # Safety
 * `mesh` must be null or a handle from this library.
 */
size_t mhg_mesh_vertex_count(const struct MhgMesh *mesh);

/**
 * # Safety
 * `mesh` must be null or a handle from this library, not yet freed.
 */
void mhg_mesh_free(struct MhgMesh *mesh);

/**
 * Symmetric Chamfer distance between the vertex sets.
 *
 * # Safety
 * Handles must be valid; `out` must be writable.
 */
enum MhgStatus mhg_chamfer(const struct MhgMesh *a, const struct MhgMesh *b, double *out);

/**
 * Mean distance between corresponding vertices.
 *
 * # Safety
 * Handles must be valid; `out` must be writable.
 */
enum MhgStatus mhg_v2v(const struct MhgMesh *a, const struct MhgMesh *b, double *out);

/**
 * Least-squares fit of `source` onto `target` (corresponding vertices).
 *
 * # Safety
 * Handles must be valid; `out` must be writable.
 */
enum MhgStatus mhg_procrustes(const struct MhgMesh *source,
                              const struct MhgMesh *target,
                              bool with_scale,
                              struct MhgSimilarity *out);

/**
 * Point-to-point ICP from the identity.
 *
 * # Safety
 * Handles must be valid; `out` must be writable.
 */
enum MhgStatus mhg_icp(const struct MhgMesh *source,
                       const struct MhgMesh *target,
                       uint32_t max_iterations,
                       double tolerance,
                       struct MhgIcpResult *out);

/**
 * Mean of `count` row-major rotation matrices, written as 9 doubles.
 *
 * # Safety
 * `rotations` must hold `9 * count` doubles; `out` must hold 9.
 */
enum MhgStatus mhg_average_rotations(const double *rotations, size_t count, double *out);

/**
 * Loads a scene JSON file with its meshes and masks.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum MhgStatus mhg_scene_load(const char *path, struct MhgScene **out);

/**
 * # Safety
 * `scene` must be null or a handle from this library, not yet freed.
 */
void mhg_scene_free(struct MhgScene *scene);

/**
 * # Safety
 * `scene` must be null or a valid handle.
 */
size_t mhg_scene_human_count(const struct MhgScene *scene);

/**
 * # Safety
 * `scene` must be null or a valid handle.
 */
size_t mhg_scene_object_count(const struct MhgScene *scene);

/**
 * One similarity fit over every entity of the scene (M protocol).
 *
 * # Safety
 * Handles must be valid; `out` must be writable.
 */
enum MhgStatus mhg_align_scene(const struct MhgScene *pred,
                               const struct MhgScene *gt,
                               struct MhgReport **out);

/**
 * One similarity fit over a single human-object pair (S protocol).
 *
 * # Safety
 * Handles must be valid; `out` must be writable.
 */
enum MhgStatus mhg_align_pair(const struct MhgScene *pred,
                              const struct MhgScene *gt,
                              size_t human,
                              size_t object,
                              struct MhgReport **out);

/**
 * # Safety
 * `report` must be null or a handle from this library, not yet freed.
 */
void mhg_report_free(struct MhgReport *report);

/**
 * # Safety
 * `report` must be valid; `out` must be writable.
 */
enum MhgStatus mhg_report_transform(const struct MhgReport *report, struct MhgSimilarity *out);

/**
 * Number of humans covered by the report.
 *
 * # Safety
 * `report` must be null or a valid handle.
 */
size_t mhg_report_human_count(const struct MhgReport *report);

/**
 * Number of objects covered by the report.
 *
 * # Safety
 * `report` must be null or a valid handle.
 */
size_t mhg_report_object_count(const struct MhgReport *report);

/**
 * CD and V2V (meters) of the `index`-th human covered by the report.
 *
 * # Safety
 * `report` must be valid; `cd` and `v2v` must be writable.
 */
enum MhgStatus mhg_report_human_metrics(const struct MhgReport *report,
                                        size_t index,
                                        double *cd,
                                        double *v2v);

/**
 * CD and V2V (meters) of the `index`-th object covered by the report.
 *
 * # Safety
 * `report` must be valid; `cd` and `v2v` must be writable.
 */
enum MhgStatus mhg_report_object_metrics(const struct MhgReport *report,
                                         size_t index,
                                         double *cd,
                                         double *v2v);

/**
 * Consistency loss between one body part of `human` and `object` in the
 * same scene. `part` is the body-part id (0 = head ... 13 = right foot).
 *
 * # Safety
 * `scene` must be valid; `out` must be writable.
 */
enum MhgStatus mhg_consistency_loss(const struct MhgScene *scene,
                                    size_t human,
                                    size_t object,
                                    uint32_t part,
                                    double delta,
                                    double *out);

/**
 * Dual patches for every object, using the built-in shrink rules. Writes
 * up to `capacity` entries and the object count into `written`; returns
 * `MHG_STATUS_BUFFER_TOO_SMALL` when `capacity` is short.
 *
 * # Safety
 * `scene` must be valid; `out` must hold `capacity` entries; `written`
 * must be writable.
 */
enum MhgStatus mhg_scene_dual_patches(const struct MhgScene *scene,
                                      uint32_t patch_size,
                                      struct MhgDualPatch *out,
                                      size_t capacity,
                                      size_t *written);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MMHOI_GEOM_H */
