#ifndef EGCSI_H
#define EGCSI_H

/* Generated by cbindgen from egcsi-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes for every API call.
 */
typedef enum EgcsiStatus {
  EGCSI_STATUS_OK = 0,
  EGCSI_STATUS_NULL_POINTER = 1,
  EGCSI_STATUS_INVALID_ARGUMENT = 2,
  EGCSI_STATUS_NUMERICAL_ERROR = 3,
  EGCSI_STATUS_IO_ERROR = 4,
  EGCSI_STATUS_UTF8_ERROR = 5,
} EgcsiStatus;

/**
 * Opaque alignment engine (codebooks + transforms) for one geometry.
 */
typedef struct EgcsiAligner EgcsiAligner;

/**
 * Opaque dataset of channel samples sharing one geometry.
 */
typedef struct EgcsiDataset EgcsiDataset;

/**
 * Opaque antenna/subcarrier geometry.
 */
typedef struct EgcsiGeometry EgcsiGeometry;

/**
 * Per-cluster alignment metadata.
 */
typedef struct EgcsiMetadata {
  uint32_t n1;
  uint32_t n2;
  uint32_t m;
  uint32_t t;
} EgcsiMetadata;

/**
 * Hybrid rank estimate.
 */
typedef struct EgcsiRankEstimate {
  uint32_t r_mdl;
  uint32_t r_threshold;
  uint32_t r_final;
} EgcsiRankEstimate;

/**
 * Synthetic environment parameters (angles in radians, delays in seconds).
 */
typedef struct EgcsiEnvConfig {
  uint32_t cluster_count_min;
  uint32_t cluster_count_max;
  double aaod_lo;
  double aaod_hi;
  double eaod_lo;
  double eaod_hi;
  double delay_lo;
  double delay_hi;
  double aod_spread;
  double delay_spread;
  uint32_t paths_per_cluster;
  double power_decay_db_per_cluster;
  uint64_t seed;
} EgcsiEnvConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *egcsi_status_message(enum EgcsiStatus status);

/**
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum EgcsiStatus egcsi_geometry_new(uint32_t n_h,
                                    uint32_t n_v,
                                    uint32_t n_c,
                                    double bandwidth_hz,
                                    struct EgcsiGeometry **out);

/**
 * # Safety
 * `geom` must come from [`egcsi_geometry_new`] and not be freed twice.
 */
void egcsi_geometry_free(struct EgcsiGeometry *geom);

/**
 * # Safety
 * `geom` must be a live handle; `out` a valid slot.
 */
enum EgcsiStatus egcsi_geometry_n_t(const struct EgcsiGeometry *geom, uint32_t *out);

/**
 * # Safety
 * `geom` must be a live handle; `out` a valid slot.
 */
enum EgcsiStatus egcsi_aligner_new(const struct EgcsiGeometry *geom,
                                   uint32_t o_h,
                                   uint32_t o_v,
                                   uint32_t o_d,
                                   uint8_t q_p,
                                   struct EgcsiAligner **out);

/**
 * # Safety
 * `aligner` must come from [`egcsi_aligner_new`] and not be freed twice.
 */
void egcsi_aligner_free(struct EgcsiAligner *aligner);

/**
 * Align one spatial-frequency-domain cluster. `cluster` and `out_aligned`
 * are `2 * n_t * n_c` doubles; `out_aligned` receives the angular-delay
 * aligned component.
 *
 * # Safety
 * All pointers must be valid for the documented sizes.
 */
enum EgcsiStatus egcsi_align_cluster(const struct EgcsiAligner *aligner,
                                     uint32_t n_t,
                                     uint32_t n_c,
                                     const double *cluster,
                                     double *out_aligned,
                                     struct EgcsiMetadata *out_meta);

/**
 * Exact inverse of [`egcsi_align_cluster`] given the metadata.
 *
 * # Safety
 * All pointers must be valid for the documented sizes.
 */
enum EgcsiStatus egcsi_unalign_cluster(const struct EgcsiAligner *aligner,
                                       uint32_t n_t,
                                       uint32_t n_c,
                                       const double *aligned,
                                       struct EgcsiMetadata meta,
                                       double *out_cluster);

/**
 * Hybrid MDL/threshold rank estimate of an `n_t x n_c` channel.
 *
 * # Safety
 * `h` must hold `2 * n_t * n_c` doubles; `out` must be a valid slot.
 */
enum EgcsiStatus egcsi_estimate_rank(const double *h,
                                     uint32_t n_t,
                                     uint32_t n_c,
                                     double eta,
                                     uint32_t r_max,
                                     struct EgcsiRankEstimate *out);

/**
 * Leading-`r` rank-1 decoupling. `out_clusters` receives `r` consecutive
 * matrix buffers (`r * 2 * n_t * n_c` doubles) ordered by descending
 * singular value.
 *
 * # Safety
 * Buffers must be valid for the documented sizes.
 */
enum EgcsiStatus egcsi_decouple(const double *h,
                                uint32_t n_t,
                                uint32_t n_c,
                                uint32_t r,
                                double *out_clusters);

/**
 * NMSE of a reconstruction. `out_linear` gets the linear ratio;
 * `out_db` gets `10 log10` of it, or `-HUGE_VAL` for an exact match.
 *
 * # Safety
 * Matrix buffers must hold `2 * n_t * n_c` doubles.
 */
enum EgcsiStatus egcsi_nmse_db(const double *h_hat,
                               const double *h,
                               uint32_t n_t,
                               uint32_t n_c,
                               double *out_linear,
                               double *out_db);

/**
 * Generate a dataset from a synthetic environment.
 *
 * # Safety
 * `geom` must be live; `env` and `out` valid pointers.
 */
enum EgcsiStatus egcsi_dataset_generate(const struct EgcsiGeometry *geom,
                                        const struct EgcsiEnvConfig *env,
                                        uint32_t n_samples,
                                        struct EgcsiDataset **out);

/**
 * # Safety
 * `ds` must come from a dataset constructor and not be freed twice.
 */
void egcsi_dataset_free(struct EgcsiDataset *ds);

/**
 * # Safety
 * `ds` must be live; `out` a valid slot.
 */
enum EgcsiStatus egcsi_dataset_len(const struct EgcsiDataset *ds, uint32_t *out);

/**
 * Copy sample `index` into a `2 * n_t * n_c`-double buffer.
 *
 * # Safety
 * `ds` must be live; `out` valid for the dataset's matrix size.
 */
enum EgcsiStatus egcsi_dataset_get_channel(const struct EgcsiDataset *ds,
                                           uint32_t index,
                                           double *out);

/**
 * Write a dataset to a `.csit` file.
 *
 * # Safety
 * `ds` must be live; `path` a NUL-terminated UTF-8 string.
 */
enum EgcsiStatus egcsi_dataset_write_csit(const struct EgcsiDataset *ds, const char *path);

/**
 * Read a `.csit` file into a new dataset handle; the header dims are
 * reported through the out parameters.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string; out pointers valid slots.
 */
enum EgcsiStatus egcsi_dataset_read_csit(const char *path,
                                         struct EgcsiDataset **out,
                                         uint32_t *out_n_h,
                                         uint32_t *out_n_v,
                                         uint32_t *out_n_c);

/**
 * Library version as a newly allocated C string; free with
 * [`egcsi_string_free`].
 */
char *egcsi_version(void);

/**
 * # Safety
 * `s` must be a string returned by this library and not yet freed.
 */
void egcsi_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EGCSI_H */
