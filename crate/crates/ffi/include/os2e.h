#ifndef OS2E_H
#define OS2E_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Largest number of scale factors an [`Os2eCropConfig`] can carry.
 */
#define OS2E_MAX_SCALES 8

typedef enum Os2eStatus {
  OS2E_STATUS_OK = 0,
  OS2E_STATUS_NULL_POINTER = 1,
  OS2E_STATUS_INVALID_ARGUMENT = 2,
  OS2E_STATUS_DIMENSION_MISMATCH = 3,
  OS2E_STATUS_UNNORMALIZED = 4,
  OS2E_STATUS_IMAGE_TOO_SMALL = 5,
  OS2E_STATUS_INSUFFICIENT_CLASSES = 6,
  OS2E_STATUS_IO = 7,
  OS2E_STATUS_PARSE = 8,
  OS2E_STATUS_DIVERGENCE = 9,
  /**
   * A panic was caught at the boundary.
   */
  OS2E_STATUS_INTERNAL = 10,
} Os2eStatus;

/**
 * Opaque trained network.
 */
typedef struct Os2eModel Os2eModel;

/**
 * Crop grid settings. Only the first `n_scale_factors` entries of
 * `scale_factors` are read.
 */
typedef struct Os2eCropConfig {
  size_t base_side;
  size_t crop_side;
  size_t grid;
  size_t n_scale_factors;
  double scale_factors[OS2E_MAX_SCALES];
  bool aspect_preserving;
  bool square;
} Os2eCropConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *os2e_error_message(void);

/**
 * Entropy in bits of one posterior row `p(e|c)` of length `n_events`.
 * The row must sum to 1 within 1e-6.
 *
 * # Safety
 * `posterior` must hold `n_events` values and `out_bits` be writable.
 */
enum Os2eStatus os2e_conditional_entropy(const double *posterior,
                                         size_t n_events,
                                         double *out_bits);

/**
 * Greedy class selection from a `n_classes x n_events` conditional table
 * `p(c|e)` and per-event sample counts. Writes `k` class indices in pick
 * order and the energy of the subset.
 *
 * # Safety
 * `cond` must hold `n_classes * n_events` values, `counts` `n_events`
 * values and `out_selected` room for `k` entries.
 */
enum Os2eStatus os2e_select_classes(const double *cond,
                                    size_t n_classes,
                                    size_t n_events,
                                    const size_t *counts,
                                    double lambda,
                                    size_t k,
                                    size_t *out_selected,
                                    double *out_energy);

/**
 * Loads a checkpoint JSON file.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out_model` writable. On
 * success `*out_model` must later be passed to [`os2e_model_free`].
 */
enum Os2eStatus os2e_model_load(const char *path, struct Os2eModel **out_model);

/**
 * Input width and event count of a model.
 *
 * # Safety
 * `model` must come from [`os2e_model_load`]; outputs must be writable.
 */
enum Os2eStatus os2e_model_dims(const struct Os2eModel *model,
                                size_t *out_inputs,
                                size_t *out_events);

/**
 * Event probabilities for `n_rows` inputs of width `n_cols`.
 *
 * # Safety
 * `inputs` must hold `n_rows * n_cols` values and `out_probs` room for
 * `n_rows * n_events`.
 */
enum Os2eStatus os2e_model_predict(const struct Os2eModel *model,
                                   const double *inputs,
                                   size_t n_rows,
                                   size_t n_cols,
                                   double *out_probs);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must be null or come from [`os2e_model_load`] and not be used
 * afterwards.
 */
void os2e_model_free(struct Os2eModel *model);

/**
 * The default crop grid: base 256, crop 224, scales 1, 1.5 and 2, both
 * ratio modes, 3x3 cells.
 *
 * # Safety
 * `out_config` must be writable.
 */
enum Os2eStatus os2e_crop_config_default(struct Os2eCropConfig *out_config);

/**
 * Number of regions scored per image.
 *
 * # Safety
 * `config` must point to a valid config and `out_count` be writable.
 */
enum Os2eStatus os2e_region_count(const struct Os2eCropConfig *config, size_t *out_count);

/**
 * Multi-region event scores of one interleaved `height x width x channels`
 * image. Both models must read flattened crops and share the event count.
 *
 * # Safety
 * `pixels` must hold `height * width * channels` values and `out_scores`
 * room for the event count.
 */
enum Os2eStatus os2e_infer_image(const struct Os2eModel *object_model,
                                 const struct Os2eModel *scene_model,
                                 const double *pixels,
                                 size_t height,
                                 size_t width,
                                 size_t channels,
                                 const struct Os2eCropConfig *config,
                                 double mean_pixel,
                                 double alpha_o,
                                 double alpha_s,
                                 double *out_scores);

/**
 * Top-1 accuracy and mean average precision of an `n_samples x n_events`
 * score matrix.
 *
 * # Safety
 * `scores` must hold `n_samples * n_events` values and `labels`
 * `n_samples` values.
 */
enum Os2eStatus os2e_evaluate(const double *scores,
                              size_t n_samples,
                              size_t n_events,
                              const size_t *labels,
                              double *out_accuracy,
                              double *out_map);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OS2E_H */
