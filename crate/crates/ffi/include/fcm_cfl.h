#ifndef FCM_CFL_H
#define FCM_CFL_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FcmStatus {
  FCM_STATUS_OK = 0,
  FCM_STATUS_NULL_POINTER = 1,
  FCM_STATUS_INVALID_ARGUMENT = 2,
  FCM_STATUS_NOT_POSITIVE_DEFINITE = 3,
  FCM_STATUS_NOT_CONVERGED = 4,
  FCM_STATUS_BUFFER_TOO_SMALL = 5,
  FCM_STATUS_INTERNAL = 6,
} FcmStatus;

/**
 * Opaque element matrices.
 */
typedef struct FcmElement FcmElement;

typedef struct FcmSingleDof {
  double mass;
  double stiffness;
  double lambda;
  double dt_crit;
} FcmSingleDof;

typedef struct FcmCflEstimate {
  double dt_full_c;
  double dt_full_l;
  double cfl_factor;
  double dt_cfl_fc;
  double c_cfl_c;
  double c_cfl_l;
} FcmCflEstimate;

typedef struct FcmPlateResult {
  double dt_element;
  double dt_global;
  double dt_full_c;
  double dt_full_l;
  double dt_cfl_fc;
  bool element_ok;
  bool global_ok;
} FcmPlateResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 *
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *fcm_last_error_message(void);

/**
 * Closed-form mass, stiffness, eigenvalue and critical step of the
 * single-DOF corner-cut element.
 *
 * # Safety
 * Pointer arguments must be null or valid for the documented access.
 */
enum FcmStatus fcm_single_dof(double chi, double alpha, size_t dim, struct FcmSingleDof *out);

/**
 * `2 / sqrt(lambda_max)`
 *
 * # Safety
 * Pointer arguments must be null or valid for the documented access.
 */
enum FcmStatus fcm_critical_dt(double lambda_max, double *out);

/**
 * `alpha^(1 / (dim + 2))`
 *
 * # Safety
 * Pointer arguments must be null or valid for the documented access.
 */
enum FcmStatus fcm_cfl_factor(double alpha, size_t dim, double *out);

/**
 * Uncut-element steps (consistent and lumped) and the modified CFL step
 * for an element of size `h` and wave speed `c`.
 *
 * # Safety
 * Pointer arguments must be null or valid for the documented access.
 */
enum FcmStatus fcm_cfl_estimate(size_t dim,
                                size_t degree,
                                double alpha,
                                double h,
                                double c,
                                struct FcmCflEstimate *out);

/**
 * Element-wise and global critical steps of the perforated plate with
 * holes shifted by `(dx, dy)`, on the default 45 x 15 grid.
 *
 * # Safety
 * Pointer arguments must be null or valid for the documented access.
 */
enum FcmStatus fcm_plate_configuration(size_t degree,
                                       size_t depth,
                                       double alpha,
                                       double dx,
                                       double dy,
                                       struct FcmPlateResult *out);

/**
 * Matrices of the unit element whose physical part is `[0, chi]^dim`.
 *
 * On success `*out` owns a new handle; release it with [`fcm_element_free`].
 *
 * # Safety
 * `el` must be null or a live handle; output pointers must be null or valid for writes.
 */
enum FcmStatus fcm_element_new_cornercut(size_t degree,
                                         size_t dim,
                                         double chi,
                                         double alpha,
                                         struct FcmElement **out);

/**
 * Number of DOFs, i.e. the matrix dimension.
 *
 * # Safety
 * `el` must be null or a live handle; output pointers must be null or valid for writes.
 */
enum FcmStatus fcm_element_size(const struct FcmElement *el, size_t *out);

/**
 * Copies the mass matrix into `buf` (column-major, `size * size` values).
 *
 * # Safety
 * `el` must be null or a live handle and `buf` must be null or valid for `len` writes.
 */
enum FcmStatus fcm_element_copy_mass(const struct FcmElement *el, double *buf, size_t len);

/**
 * Copies the stiffness matrix into `buf` (column-major, `size * size` values).
 *
 * # Safety
 * `el` must be null or a live handle and `buf` must be null or valid for `len` writes.
 */
enum FcmStatus fcm_element_copy_stiffness(const struct FcmElement *el, double *buf, size_t len);

/**
 * Largest generalized eigenvalue and the matching critical step.
 *
 * # Safety
 * `el` must be null or a live handle; output pointers must be null or valid for writes.
 */
enum FcmStatus fcm_element_max_eig(const struct FcmElement *el,
                                   double *lambda_max,
                                   double *dt_crit);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `el` must be null or a live handle from `fcm_element_new_cornercut`; it is invalid afterwards.
 */
void fcm_element_free(struct FcmElement *el);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FCM_CFL_H */
