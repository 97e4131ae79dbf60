#ifndef INVSCHEME_H
#define INVSCHEME_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum InvStatus {
  INV_STATUS_OK = 0,
  INV_STATUS_DOMAIN = 1,
  INV_STATUS_POLE = 2,
  INV_STATUS_BRANCH = 3,
  INV_STATUS_DEGENERATE_STENCIL = 4,
  INV_STATUS_INDEX = 5,
  INV_STATUS_ZERO_STEP = 6,
  INV_STATUS_INSUFFICIENT_NODES = 7,
  INV_STATUS_NON_CONVERGENCE = 8,
  INV_STATUS_ZERO_INTEGRAL = 9,
  INV_STATUS_CONSTRUCTION = 10,
  INV_STATUS_INVALID_PARAMETER = 11,
  INV_STATUS_PARSE = 12,
  INV_STATUS_IO = 13,
  INV_STATUS_NULL_POINTER = 14,
  INV_STATUS_PANIC = 15,
} InvStatus;

typedef enum InvIntegral {
  INV_INTEGRAL_J1 = 0,
  INV_INTEGRAL_J2 = 1,
  INV_INTEGRAL_J3 = 2,
  INV_INTEGRAL_J4 = 3,
  INV_INTEGRAL_C = 4,
  INV_INTEGRAL_C_TILDE = 5,
  INV_INTEGRAL_WINTERNITZ_U = 6,
  INV_INTEGRAL_WINTERNITZ_X = 7,
} InvIntegral;

/**
 * Opaque trajectory handle.
 */
typedef struct InvTrajectory InvTrajectory;

/**
 * Scheme constants; `theta` is used as given.
 */
typedef struct InvSchemeParams {
  double c;
  double eps;
  double theta;
  double k;
} InvSchemeParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; valid until the next failing call.
 */
const char *inv_last_error_message(void);

double inv_theta_exact(double c, double eps);

double inv_k_from_c(double c, double eps);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum InvStatus inv_cross_ratio_same(double a, double b, double c, double d, double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum InvStatus inv_cross_ratio_mixed(double x0, double u0, double x1, double u1, double *out);

/**
 * Next value of a cross-ratio-`k` sequence.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum InvStatus inv_winternitz_step(double y_m, double y0, double y_p, double k, double *out);

/**
 * Schwarzian from the first three derivatives.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum InvStatus inv_schwarzian(double y1, double y2, double y3, double *out);

/**
 * One step of the second-order scheme with default Newton settings.
 *
 * # Safety
 * `p`, `x_out` and `u_out` must be valid pointers.
 */
enum InvStatus inv_ode2_step(double x_prev,
                             double u_prev,
                             double x_cur,
                             double u_cur,
                             const struct InvSchemeParams *p,
                             double *x_out,
                             double *u_out);

/**
 * Trajectory from `len` abscissae and ordinates labelled `n0, n0 + 1, ...`.
 *
 * # Safety
 * `x` and `u` must point to `len` readable values; `out` must be valid for writes.
 */
enum InvStatus inv_trajectory_new(int64_t n0,
                                  const double *x,
                                  const double *u,
                                  size_t len,
                                  struct InvTrajectory **out);

/**
 * Closed-form nodes `n_start..=n_end` of the second-order scheme (`c = ±2`).
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum InvStatus inv_trajectory_ode2_exact(double a,
                                         double b,
                                         double c,
                                         double eps,
                                         double rho,
                                         int64_t n_start,
                                         int64_t n_end,
                                         struct InvTrajectory **out);

/**
 * Closed-form Winternitz solution from six constants; the result carries `(t, y)`.
 *
 * # Safety
 * `c` must point to six readable values; `out` must be valid for writes.
 */
enum InvStatus inv_trajectory_winternitz_exact(const double *c,
                                               int64_t n_start,
                                               int64_t n_end,
                                               struct InvTrajectory **out);

/**
 * Steps the second-order scheme `steps` times from the last two nodes of `seed`.
 *
 * # Safety
 * `seed` must be a live handle; `p` and `out` must be valid pointers.
 */
enum InvStatus inv_ode2_solve(const struct InvTrajectory *seed,
                              size_t steps,
                              const struct InvSchemeParams *p,
                              struct InvTrajectory **out);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
size_t inv_trajectory_len(const struct InvTrajectory *h);

/**
 * Label, abscissa and ordinate of node `i`.
 *
 * # Safety
 * `h` must be a live handle; the out-pointers must be valid for writes.
 */
enum InvStatus inv_trajectory_get(const struct InvTrajectory *h,
                                  size_t i,
                                  int64_t *n_out,
                                  double *x_out,
                                  double *u_out);

/**
 * Nonzero when the handle carries `(t, y)` rather than `(x, u)`.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
int32_t inv_trajectory_is_ty(const struct InvTrajectory *h);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `h` must be null or a handle not yet freed.
 */
void inv_trajectory_free(struct InvTrajectory *h);

/**
 * Mean and largest deviation from it of one discrete integral along `h`.
 *
 * # Safety
 * `h` must be a live handle; `p`, `mean` and `drift` must be valid pointers.
 */
enum InvStatus inv_integral_report(const struct InvTrajectory *h,
                                   enum InvIntegral kind,
                                   const struct InvSchemeParams *p,
                                   double *mean,
                                   double *drift);

/**
 * Largest scheme and mesh residuals of the second-order scheme along `h`.
 *
 * # Safety
 * `h` must be a live handle; the other pointers must be valid.
 */
enum InvStatus inv_ode2_max_residuals(const struct InvTrajectory *h,
                                      const struct InvSchemeParams *p,
                                      double *scheme_out,
                                      double *mesh_out);

/**
 * Largest Winternitz residual along `h`.
 *
 * # Safety
 * `h` must be a live handle; `out` must be valid for writes.
 */
enum InvStatus inv_winternitz_max_residual(const struct InvTrajectory *h, double k, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INVSCHEME_H */
