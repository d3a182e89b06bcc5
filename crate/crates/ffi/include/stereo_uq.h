#ifndef STEREO_UQ_H
#define STEREO_UQ_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  UQ_STATUS_OK = 0,
  UQ_STATUS_NULL_POINTER = 1,
  UQ_STATUS_INVALID_ARGUMENT = 2,
  UQ_STATUS_DIMENSION_MISMATCH = 3,
  UQ_STATUS_IO = 4,
  UQ_STATUS_FORMAT = 5,
  UQ_STATUS_EMPTY = 6,
  UQ_STATUS_NUMERIC = 7,
  UQ_STATUS_PANIC = 8,
} UqStatus;

/**
 * Fitted kernel estimator.
 */
typedef struct UqEstimator UqEstimator;

/**
 * Output of one inference call.
 */
typedef struct UqInference UqInference;

/**
 * Trained matcher.
 */
typedef struct UqMatcher UqMatcher;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` is null or points to `len` writable bytes.
 */
size_t uq_last_error_message(char *buf, size_t len);

/**
 * Loads a model container written by `stereo-uq train`.
 *
 * # Safety
 * `path` is a NUL-terminated string; `out` points to writable storage.
 */
UqStatus uq_matcher_load(const char *path, UqMatcher **out);

/**
 * # Safety
 * `m` is null or a handle from [`uq_matcher_load`] not yet freed.
 */
void uq_matcher_free(UqMatcher *m);

/**
 * Number of disparity bins `K`; 0 for a null handle.
 *
 * # Safety
 * `m` is null or a live handle.
 */
size_t uq_matcher_bins(const UqMatcher *m);

/**
 * Runs the matcher on a rectified `height x width` pair (intensities 0-255).
 *
 * # Safety
 * `left` and `right` point to `height * width` values; `out` is writable.
 */
UqStatus uq_matcher_infer(const UqMatcher *m,
                          const double *left,
                          const double *right,
                          size_t height,
                          size_t width,
                          UqInference **out);

/**
 * # Safety
 * `inf` is null or a handle from [`uq_matcher_infer`] not yet freed.
 */
void uq_inference_free(UqInference *inf);

/**
 * Writes the map height, width and embedding dimension.
 *
 * # Safety
 * `inf` is a live handle; the out pointers are writable.
 */
UqStatus uq_inference_dims(const UqInference *inf, size_t *height, size_t *width, size_t *dim);

/**
 * Copies the expected disparity map (`height * width` values).
 *
 * # Safety
 * `inf` is a live handle; `out` points to `len` writable values.
 */
UqStatus uq_inference_disparity(const UqInference *inf, double *out, size_t len);

/**
 * Copies the data-uncertainty (PMF variance) map.
 *
 * # Safety
 * `inf` is a live handle; `out` points to `len` writable values.
 */
UqStatus uq_inference_data_uncertainty(const UqInference *inf, double *out, size_t len);

/**
 * Copies the per-pixel PMFs (`height * width * K` values).
 *
 * # Safety
 * `inf` is a live handle; `out` points to `len` writable values.
 */
UqStatus uq_inference_pmf(const UqInference *inf, double *out, size_t len);

/**
 * Copies the embeddings (`height * width * dim` values).
 *
 * # Safety
 * `inf` is a live handle; `out` points to `len` writable values.
 */
UqStatus uq_inference_embeddings(const UqInference *inf, double *out, size_t len);

/**
 * Loads an estimator container written by `stereo-uq fit-uq`.
 *
 * # Safety
 * `path` is a NUL-terminated string; `out` points to writable storage.
 */
UqStatus uq_estimator_load(const char *path, UqEstimator **out);

/**
 * # Safety
 * `est` is null or a handle from [`uq_estimator_load`] not yet freed.
 */
void uq_estimator_free(UqEstimator *est);

/**
 * Embedding dimension of the bank; 0 for a null handle.
 *
 * # Safety
 * `est` is null or a live handle.
 */
size_t uq_estimator_dim(const UqEstimator *est);

/**
 * Kernel-regression prediction and model uncertainty for one embedding.
 * `clamped` is set to 1 when the uncertainty hit the cap.
 *
 * # Safety
 * `est` is a live handle; `query` points to `dim` values; outputs are writable.
 */
UqStatus uq_estimator_query(const UqEstimator *est,
                            const double *query,
                            size_t dim,
                            double *prediction,
                            double *model_uncertainty,
                            uint8_t *clamped);

/**
 * Per-pixel model uncertainty of an inference result (`height * width` values).
 *
 * # Safety
 * Handles are live; `out` points to `len` writable values.
 */
UqStatus uq_estimator_map(const UqEstimator *est, const UqInference *inf, double *out, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STEREO_UQ_H */
