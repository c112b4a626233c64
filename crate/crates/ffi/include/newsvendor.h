#ifndef NEWSVENDOR_H
#define NEWSVENDOR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NvStatus {
  NV_STATUS_OK = 0,
  NV_STATUS_NULL_POINTER = 1,
  NV_STATUS_DOMAIN = 2,
  NV_STATUS_INCOMPATIBLE = 3,
  NV_STATUS_UNDEFINED_GAP = 4,
  NV_STATUS_PARSE = 5,
  NV_STATUS_BUFFER_TOO_SMALL = 6,
  NV_STATUS_PANIC = 7,
} NvStatus;

typedef enum NvFamilyKind {
  /**
   * `param` is the standard deviation.
   */
  NV_FAMILY_KIND_NORMAL = 0,
  NV_FAMILY_KIND_BERNOULLI = 1,
  /**
   * `param` is the half-width.
   */
  NV_FAMILY_KIND_UNIFORM = 2,
  NV_FAMILY_KIND_POINT_MASS = 3,
  /**
   * `param` is the truncation multiplier `k`.
   */
  NV_FAMILY_KIND_TRUNCATED_POISSON = 4,
} NvFamilyKind;

/**
 * Opaque problem instance.
 */
typedef struct NvInstance NvInstance;

/**
 * Opaque result of one episode.
 */
typedef struct NvTrajectory NvTrajectory;

/**
 * A demand family over the mean range `[min_mean, max_mean]`.
 */
typedef struct NvFamily {
  enum NvFamilyKind kind;
  double param;
  double min_mean;
  double max_mean;
} NvFamily;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Expected cost of ordering `q` when demand has mean `mu`.
 *
 * # Safety
 * `fam` and `out` must be valid pointers.
 */
enum NvStatus nv_expected_cost(const struct NvFamily *fam,
                               double mu,
                               double b,
                               double h,
                               double q,
                               double *out);

/**
 * Cost-minimizing nonnegative order quantity at mean `mu`.
 *
 * # Safety
 * `fam` and `out` must be valid pointers.
 */
enum NvStatus nv_optimal_quantity(const struct NvFamily *fam,
                                  double mu,
                                  double b,
                                  double h,
                                  double *out);

/**
 * Maximum over partitions of summed `|increment|^theta`.
 *
 * # Safety
 * `seq` must point to `len` doubles; `out` must be valid.
 */
enum NvStatus nv_demand_variation(const double *seq, size_t len, double theta, double *out);

/**
 * Sum of absolute prediction errors.
 *
 * # Safety
 * `preds` and `means` must point to `len` doubles; `out` must be valid.
 */
enum NvStatus nv_prediction_error(const double *preds,
                                  const double *means,
                                  size_t len,
                                  double *out);

/**
 * `(perp - min(pure, nopred)) / |pure - nopred|`; `NV_STATUS_UNDEFINED_GAP` on equal baselines.
 *
 * # Safety
 * `out` must be valid.
 */
enum NvStatus nv_gap(double perp, double pure, double nopred, double *out);

/**
 * Bernoulli cycle instance for exponents `(v, a)`.
 *
 * # Safety
 * `out` must be valid; the handle is released with [`nv_instance_free`].
 */
enum NvStatus nv_instance_lower_bound_new(double v,
                                          double a,
                                          size_t horizon,
                                          uint64_t seed,
                                          struct NvInstance **out);

/**
 * # Safety
 * `inst` must come from an `nv_instance_*_new` call and not be used afterwards.
 */
void nv_instance_free(struct NvInstance *inst);

/**
 * # Safety
 * `inst` and `out` must be valid.
 */
enum NvStatus nv_instance_horizon(const struct NvInstance *inst, size_t *out);

/**
 * Run the policy described by `policy_toml` (e.g. `kind = "fixed-window"` and `v = 0.5`).
 *
 * # Safety
 * `inst` must be valid, `policy_toml` a NUL-terminated UTF-8 string and
 * `out` valid; the handle is released with [`nv_trajectory_free`].
 */
enum NvStatus nv_run_episode(const struct NvInstance *inst,
                             const char *policy_toml,
                             uint64_t seed,
                             struct NvTrajectory **out);

/**
 * # Safety
 * `traj` must come from [`nv_run_episode`] and not be used afterwards.
 */
void nv_trajectory_free(struct NvTrajectory *traj);

/**
 * # Safety
 * `traj` and `out` must be valid.
 */
enum NvStatus nv_trajectory_len(const struct NvTrajectory *traj, size_t *out);

/**
 * # Safety
 * `traj` and `out` must be valid.
 */
enum NvStatus nv_trajectory_total_regret(const struct NvTrajectory *traj, double *out);

/**
 * Copy the ordered quantities into `buf`, which must hold the trajectory length.
 *
 * # Safety
 * `traj` must be valid and `buf` must point to `cap` writable doubles.
 */
enum NvStatus nv_trajectory_copy_quantities(const struct NvTrajectory *traj,
                                            double *buf,
                                            size_t cap);

/**
 * Copy the calling thread's last error message, NUL-terminated and
 * truncated to `cap` bytes. Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes, or be null with `cap == 0`.
 */
size_t nv_last_error_message(char *buf, size_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEWSVENDOR_H */
