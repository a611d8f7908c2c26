#ifndef POINTNETLK_H
#define POINTNETLK_H

/* Generated by cbindgen from crates/ffi/src; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Sensor model for the partial-visibility calls.
typedef enum PnlkVisibility {
  PNLK_VISIBILITY_DEPTH = 0,
  PNLK_VISIBILITY_COMPONENTWISE = 1,
} PnlkVisibility;

// Status codes returned by every fallible call.
typedef enum PnlkStatus {
  PNLK_STATUS_OK = 0,
  PNLK_STATUS_NULL_POINTER = 1,
  PNLK_STATUS_INVALID_ARGUMENT = 2,
  PNLK_STATUS_IO = 3,
  PNLK_STATUS_PARSE = 4,
  PNLK_STATUS_FORMAT = 5,
  PNLK_STATUS_DIMENSION_MISMATCH = 6,
  PNLK_STATUS_INVALID_TRANSFORM = 7,
  PNLK_STATUS_DEGENERATE = 8,
  PNLK_STATUS_EMPTY_VISIBLE_SET = 9,
  PNLK_STATUS_NUMERICAL_FAILURE = 10,
  PNLK_STATUS_BUFFER_TOO_SMALL = 11,
  PNLK_STATUS_PANIC = 12,
} PnlkStatus;

// Opaque point cloud.
typedef struct PnlkCloud PnlkCloud;

// Opaque feature encoder.
typedef struct PnlkEncoder PnlkEncoder;

typedef struct PnlkSolverConfig {
  double step;
  size_t max_iters;
  double stop_threshold;
  double pinv_rcond;
  bool subtract_means;
  enum PnlkVisibility visibility;
} PnlkSolverConfig;

typedef struct PnlkIcpConfig {
  size_t max_iters;
  double stop_mse_delta;
  double partial_stop_threshold;
} PnlkIcpConfig;

typedef struct PnlkResult {
  // Row-major 4×4 transform taking the source onto the template.
  double estimate[16];
  size_t iterations_used;
  bool converged;
  double residual_norm;
} PnlkResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until the
// next failing call on the same thread.
const char *pnlk_last_error_message(void);

// Static NUL-terminated version string.
const char *pnlk_version(void);

struct PnlkSolverConfig pnlk_solver_config_default(void);

struct PnlkIcpConfig pnlk_icp_config_default(void);

// Builds a cloud from `n_points` interleaved xyz triples.
//
// # Safety
// `xyz` must point to `3 * n_points` readable doubles; `out` must be writable.
enum PnlkStatus pnlk_cloud_new(const double *xyz, size_t n_points, struct PnlkCloud **out);

// Reads an XYZ text file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum PnlkStatus pnlk_cloud_load_xyz(const char *path, struct PnlkCloud **out);

// Number of points, or 0 for NULL.
//
// # Safety
// `cloud` must be NULL or a live handle.
size_t pnlk_cloud_len(const struct PnlkCloud *cloud);

// Copies interleaved xyz into `out`, which holds `capacity` doubles.
//
// # Safety
// `cloud` must be a live handle; `out` must point to `capacity` writable doubles.
enum PnlkStatus pnlk_cloud_copy_points(const struct PnlkCloud *cloud, double *out, size_t capacity);

// # Safety
// `cloud` must be NULL or a handle not yet freed.
void pnlk_cloud_free(struct PnlkCloud *cloud);

// The analytic moment encoder (12 features).
//
// # Safety
// `out` must be writable.
enum PnlkStatus pnlk_encoder_moment(struct PnlkEncoder **out);

// Loads an MLP encoder from a PNLKW1 weights file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum PnlkStatus pnlk_encoder_load(const char *path, struct PnlkEncoder **out);

// Feature length K, or 0 for NULL.
//
// # Safety
// `encoder` must be NULL or a live handle.
size_t pnlk_encoder_feature_dim(const struct PnlkEncoder *encoder);

// Writes φ(cloud) into `out`, which holds `capacity` doubles.
//
// # Safety
// Handles must be live; `out` must point to `capacity` writable doubles.
enum PnlkStatus pnlk_encoder_encode(const struct PnlkEncoder *encoder,
                                    const struct PnlkCloud *cloud,
                                    double *out,
                                    size_t capacity);

// # Safety
// `encoder` must be NULL or a handle not yet freed.
void pnlk_encoder_free(struct PnlkEncoder *encoder);

// IC-LK registration of `source` onto `template`. A NULL `config` selects
// the defaults.
//
// # Safety
// Handles must be live; `config` must be NULL or readable; `out` writable.
enum PnlkStatus pnlk_register(const struct PnlkEncoder *encoder,
                              const struct PnlkCloud *template_,
                              const struct PnlkCloud *source,
                              const struct PnlkSolverConfig *config,
                              struct PnlkResult *out);

// IC-LK with the partial-visibility loop.
//
// # Safety
// As for [`pnlk_register`].
enum PnlkStatus pnlk_register_partial(const struct PnlkEncoder *encoder,
                                      const struct PnlkCloud *template_,
                                      const struct PnlkCloud *source,
                                      const struct PnlkSolverConfig *config,
                                      struct PnlkResult *out);

// Point-to-point ICP. A NULL `config` selects the defaults.
//
// # Safety
// Handles must be live; `config` must be NULL or readable; `out` writable.
enum PnlkStatus pnlk_icp_register(const struct PnlkCloud *template_,
                                  const struct PnlkCloud *source,
                                  const struct PnlkIcpConfig *config,
                                  struct PnlkResult *out);

// ICP inside the partial-visibility loop.
//
// # Safety
// As for [`pnlk_icp_register`].
enum PnlkStatus pnlk_icp_register_partial(const struct PnlkCloud *template_,
                                          const struct PnlkCloud *source,
                                          const struct PnlkIcpConfig *config,
                                          enum PnlkVisibility visibility,
                                          struct PnlkResult *out);

// Rotation error in degrees and translation error of `est` against `gt`.
//
// # Safety
// `est` and `gt` must point to 16 readable doubles; outputs must be writable.
enum PnlkStatus pnlk_pose_error(const double *est,
                                const double *gt,
                                double *rot_err_deg,
                                double *trans_err);

// `‖est⁻¹·gt − I‖_F`.
//
// # Safety
// `est` and `gt` must point to 16 readable doubles; `out` must be writable.
enum PnlkStatus pnlk_frobenius_loss(const double *est, const double *gt, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POINTNETLK_H */
