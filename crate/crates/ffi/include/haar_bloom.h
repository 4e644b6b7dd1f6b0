#ifndef HAAR_BLOOM_H
#define HAAR_BLOOM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum HbStatus {
  HB_STATUS_OK = 0,
  HB_STATUS_NULL_POINTER = 1,
  HB_STATUS_INVALID_ARGUMENT = 2,
  HB_STATUS_DEPTH_MISMATCH = 3,
  HB_STATUS_NON_FINITE = 4,
  HB_STATUS_NON_POSITIVE_WEIGHT = 5,
  HB_STATUS_TOO_LARGE = 6,
  HB_STATUS_PANIC = 7,
} HbStatus;

// Operator selector for [`hb_paraproduct_norm`].
typedef enum HbParaproduct {
  HB_PARAPRODUCT_PI11 = 0,
  HB_PARAPRODUCT_PI00 = 1,
  HB_PARAPRODUCT_PI10 = 2,
  HB_PARAPRODUCT_PI01 = 3,
  // Sum of the four.
  HB_PARAPRODUCT_LAMBDA = 4,
} HbParaproduct;

// Opaque grid function handle.
typedef struct HbGrid HbGrid;

// Opaque weight handle.
typedef struct HbWeight HbWeight;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failing call on this thread, or null.
//
// The pointer stays valid until the next failing call on the same thread.
const char *hb_last_error_message(void);

// Crate version as a static NUL-terminated string.
const char *hb_version(void);

// # Safety
// `values` must point to `len` readable doubles and `out` to writable storage for one handle.
enum HbStatus hb_grid_new(uint32_t depth, const double *values, size_t len, struct HbGrid **out);

// # Safety
// `grid` must be null or a handle from this library that has not been freed.
void hb_grid_free(struct HbGrid *grid);

// Depth of the grid, or 0 for a null handle.
//
// # Safety
// `grid` must be null or a live handle.
uint32_t hb_grid_depth(const struct HbGrid *grid);

// # Safety
// `grid` must be a live handle and `out` must point to `len` writable doubles.
enum HbStatus hb_grid_values(const struct HbGrid *grid, double *out, size_t len);

// Orthonormal tensor Haar coefficients in slot layout (`(00)` block at `kx, ky ≥ 1`).
//
// # Safety
// `grid` must be a live handle and `out` must point to `len` writable doubles.
enum HbStatus hb_haar_forward(const struct HbGrid *grid, double *out, size_t len);

// # Safety
// `coeffs` must point to `len` readable doubles and `out` to writable storage for one handle.
enum HbStatus hb_haar_inverse(uint32_t depth,
                              const double *coeffs,
                              size_t len,
                              struct HbGrid **out);

// # Safety
// `values` must point to `len` readable doubles and `out` to writable storage for one handle.
enum HbStatus hb_weight_new(uint32_t depth,
                            const double *values,
                            size_t len,
                            struct HbWeight **out);

// Seeded multiplicative cascade weight of strength `delta` in `[0, 1)`.
//
// # Safety
// `out` must point to writable storage for one handle.
enum HbStatus hb_weight_random_ap(uint32_t depth,
                                  double p,
                                  double delta,
                                  uint64_t seed,
                                  struct HbWeight **out);

// # Safety
// `weight` must be null or a handle from this library that has not been freed.
void hb_weight_free(struct HbWeight *weight);

// # Safety
// `weight` must be a live handle and `out` must point to `len` writable doubles.
enum HbStatus hb_weight_values(const struct HbWeight *weight, double *out, size_t len);

// `[w]_{A_p}` over all dyadic rectangles.
//
// # Safety
// `weight` must be a live handle and `out` writable.
enum HbStatus hb_ap_characteristic(const struct HbWeight *weight, double p, double *out);

// Two-weight product BMO norm. With `heuristic == false` every mask is enumerated (depth ≤ 2).
//
// # Safety
// Handles must be live and `out` writable.
enum HbStatus hb_bmo_two_weight(const struct HbGrid *b,
                                const struct HbWeight *mu,
                                const struct HbWeight *lambda,
                                double p,
                                bool heuristic,
                                size_t restarts,
                                uint64_t seed,
                                double *out);

// Little bmo norm; `rect_out` (nullable) receives `[x level, x index, y level, y index]`.
//
// # Safety
// Handles must be live, `out` writable, and `rect_out` null or 4 writable `u32`s.
enum HbStatus hb_little_bmo(const struct HbGrid *b,
                            const struct HbWeight *mu,
                            const struct HbWeight *lambda,
                            double p,
                            double *out,
                            uint32_t *rect_out);

// `‖Π_b‖_{L^p(μ)→L^p(λ)}`: exact at `p = 2` (`*exact = true`), a lower bound otherwise.
//
// # Safety
// Handles must be live and `out`, `exact` writable.
enum HbStatus hb_paraproduct_norm(const struct HbGrid *b,
                                  const struct HbWeight *mu,
                                  const struct HbWeight *lambda,
                                  double p,
                                  enum HbParaproduct kind,
                                  size_t restarts,
                                  uint64_t seed,
                                  double *out,
                                  bool *exact);

// `sup_{σ1,σ2} ‖[T_{σ1}^1,[T_{σ2}^2,b]]‖`; `samples == 0` enumerates every sign pair (depth ≤ 2).
//
// # Safety
// Handles must be live and `out` writable.
enum HbStatus hb_sup_commutator_norm(const struct HbGrid *b,
                                     const struct HbWeight *mu,
                                     const struct HbWeight *lambda,
                                     double p,
                                     size_t samples,
                                     size_t restarts,
                                     uint64_t seed,
                                     double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HAAR_BLOOM_H */
