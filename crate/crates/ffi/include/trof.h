#ifndef TROF_H
#define TROF_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum TrofStatus {
  TROF_STATUS_OK = 0,
  TROF_STATUS_NULL_POINTER = 1,
  TROF_STATUS_INVALID_ARGUMENT = 2,
  TROF_STATUS_SHAPE_MISMATCH = 3,
  TROF_STATUS_BUFFER_TOO_SMALL = 4,
  TROF_STATUS_IO = 5,
  TROF_STATUS_FORMAT = 6,
  TROF_STATUS_UNKNOWN_PRESET = 7,
  TROF_STATUS_PANIC = 8,
} TrofStatus;

// Total variation discretization.
typedef enum TrofTv {
  TROF_TV_ISOTROPIC = 0,
  TROF_TV_ANISOTROPIC = 1,
} TrofTv;

// Source of the initial thresholds.
typedef enum TrofInit {
  TROF_INIT_FCM = 0,
  TROF_INIT_KMEANS = 1,
  TROF_INIT_EXPLICIT = 2,
} TrofInit;

// Segmentation settings.
typedef struct TrofConfig TrofConfig;

// Grayscale image with intensities in [0, 1].
typedef struct TrofImage TrofImage;

// Output of `trof_segment`.
typedef struct TrofResult TrofResult;

// Synthetic image with ground truth.
typedef struct TrofSynthetic TrofSynthetic;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *trof_version(void);

// Message of the last failed call on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *trof_last_error(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must be NULL or a string returned by this library, freed once.
void trof_string_free(char *s);

// Creates an image from `width * height` row-major samples in [0, 1].
//
// # Safety
// `data` must point to `width * height` doubles; `out` must be writable.
enum TrofStatus trof_image_new(size_t width,
                               size_t height,
                               const double *data,
                               struct TrofImage **out);

// Reads an 8/16-bit PGM or PNG grayscale file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum TrofStatus trof_image_read(const char *path, struct TrofImage **out);

// Writes an 8-bit PGM or PNG file, chosen by extension.
//
// # Safety
// `image` must be a live handle; `path` a NUL-terminated string.
enum TrofStatus trof_image_write(const struct TrofImage *image, const char *path);

// Image width, or 0 for NULL.
//
// # Safety
// `image` must be NULL or a live handle.
size_t trof_image_width(const struct TrofImage *image);

// Image height, or 0 for NULL.
//
// # Safety
// `image` must be NULL or a live handle.
size_t trof_image_height(const struct TrofImage *image);

// Copies the samples into `buf` (capacity `len`).
//
// # Safety
// `image` must be a live handle; `buf` must hold `len` doubles.
enum TrofStatus trof_image_data(const struct TrofImage *image, double *buf, size_t len);

// # Safety
// `image` must be NULL or a handle not yet freed.
void trof_image_free(struct TrofImage *image);

// Solves the ROF problem for `image`; writes the restored image to `out`.
//
// # Safety
// `image` must be a live handle; `out` must be writable; `iterations` may be NULL.
enum TrofStatus trof_rof(const struct TrofImage *image,
                         double mu,
                         enum TrofTv tv,
                         struct TrofImage **out,
                         size_t *iterations);

// Default settings for `phases` phases and fidelity weight `mu`.
//
// # Safety
// `out` must be writable.
enum TrofStatus trof_config_new(size_t phases, double mu, struct TrofConfig **out);

// Benchmark settings of a synthetic preset (e.g. "example3").
//
// # Safety
// `preset` must be a NUL-terminated string; `out` must be writable.
enum TrofStatus trof_config_for_preset(const char *preset, struct TrofConfig **out);

// # Safety
// `config` must be NULL or a handle not yet freed.
void trof_config_free(struct TrofConfig *config);

// Sets the ROF and threshold stopping tolerances.
//
// # Safety
// `config` must be a live handle.
enum TrofStatus trof_config_set_tolerances(struct TrofConfig *config, double eps_u, double eps_tau);

// Sets the ADMM and outer iteration caps.
//
// # Safety
// `config` must be a live handle.
enum TrofStatus trof_config_set_iterations(struct TrofConfig *config,
                                           size_t max_rof_iter,
                                           size_t max_outer_iter);

// # Safety
// `config` must be a live handle.
enum TrofStatus trof_config_set_tv(struct TrofConfig *config, enum TrofTv tv);

// # Safety
// `config` must be a live handle.
enum TrofStatus trof_config_set_seed(struct TrofConfig *config, uint64_t seed);

// Selects clustering initialization; `on_input` clusters the input image
// instead of the ROF solution.
//
// # Safety
// `config` must be a live handle.
enum TrofStatus trof_config_set_init(struct TrofConfig *config, enum TrofInit init, bool on_input);

// Uses `len` explicit initial thresholds; the phase count becomes `len + 1`.
//
// # Safety
// `config` must be a live handle; `tau` must point to `len` doubles.
enum TrofStatus trof_config_set_tau(struct TrofConfig *config, const double *tau, size_t len);

// Segments `image`.
//
// # Safety
// `image` and `config` must be live handles; `out` must be writable.
enum TrofStatus trof_segment(const struct TrofImage *image,
                             const struct TrofConfig *config,
                             struct TrofResult **out);

// # Safety
// `result` must be NULL or a handle not yet freed.
void trof_result_free(struct TrofResult *result);

// Final phase count, or 0 for NULL.
//
// # Safety
// `result` must be NULL or a live handle.
size_t trof_result_phases(const struct TrofResult *result);

// Number of threshold updates, or 0 for NULL.
//
// # Safety
// `result` must be NULL or a live handle.
size_t trof_result_outer_iterations(const struct TrofResult *result);

// Whether the threshold iteration met its tolerance.
//
// # Safety
// `result` must be NULL or a live handle.
bool trof_result_converged(const struct TrofResult *result);

// Copies the per-pixel phase labels (width * height, row-major).
//
// # Safety
// `result` must be a live handle; `buf` must hold `len` elements.
enum TrofStatus trof_result_labels(const struct TrofResult *result, uint32_t *buf, size_t len);

// Copies the K - 1 final thresholds.
//
// # Safety
// `result` must be a live handle; `buf` must hold `len` doubles.
enum TrofStatus trof_result_thresholds(const struct TrofResult *result, double *buf, size_t len);

// Copies the K final phase means.
//
// # Safety
// `result` must be a live handle; `buf` must hold `len` doubles.
enum TrofStatus trof_result_means(const struct TrofResult *result, double *buf, size_t len);

// JSON report of the run; release with `trof_string_free`.
//
// # Safety
// `result` and `config` must be the live handles passed to `trof_segment`;
// `out` must be writable.
enum TrofStatus trof_result_report_json(const struct TrofResult *result,
                                        const struct TrofConfig *config,
                                        char **out);

// Generates a synthetic preset. `size == 0` keeps the preset's default size.
//
// # Safety
// `preset` must be a NUL-terminated string; `out` must be writable.
enum TrofStatus trof_synth(const char *preset,
                           size_t size,
                           uint64_t seed,
                           struct TrofSynthetic **out);

// # Safety
// `synthetic` must be NULL or a handle not yet freed.
void trof_synthetic_free(struct TrofSynthetic *synthetic);

// Copy of the degraded image as a new handle.
//
// # Safety
// `synthetic` must be a live handle; `out` must be writable.
enum TrofStatus trof_synthetic_image(const struct TrofSynthetic *synthetic, struct TrofImage **out);

// Phase count of the preset's benchmark segmentation.
//
// # Safety
// `synthetic` must be NULL or a live handle.
size_t trof_synthetic_phases(const struct TrofSynthetic *synthetic);

// Copies ground-truth labels with `phases` phases (0 = the preset's count).
//
// # Safety
// `synthetic` must be a live handle; `buf` must hold `len` elements.
enum TrofStatus trof_synthetic_truth(const struct TrofSynthetic *synthetic,
                                     size_t phases,
                                     uint32_t *buf,
                                     size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TROF_H */
