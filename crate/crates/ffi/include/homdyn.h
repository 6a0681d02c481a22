#ifndef HOMDYN_H
#define HOMDYN_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every call.
typedef enum HomdynStatus {
  HOMDYN_STATUS_OK = 0,
  HOMDYN_STATUS_NULL_POINTER = 1,
  HOMDYN_STATUS_INVALID_ARGUMENT = 2,
  HOMDYN_STATUS_NUMERIC = 3,
  HOMDYN_STATUS_FALSIFIED = 4,
  HOMDYN_STATUS_PANIC = 5,
} HomdynStatus;

// A diagonal flow `g_t` with its chart `u(w)`.
typedef struct HomdynFlow HomdynFlow;

// A unimodular lattice in `R^d`.
typedef struct HomdynLattice HomdynLattice;

// A root system with its positive roots.
typedef struct HomdynRootSystem HomdynRootSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Length in bytes of the last error message of this thread, without the terminator.
size_t homdyn_last_error_length(void);

// Copies the last error message, truncated and NUL-terminated, into `buf`.
//
// # Safety
// `buf` must point to `len` writable bytes.
enum HomdynStatus homdyn_last_error(char *buf, size_t len);

// Builds the flow with expanding exponents `a[0..m]` and contracting exponents `b[0..n]`.
//
// # Safety
// `a` and `b` must hold `m` and `n` doubles; `out` must be writable.
enum HomdynStatus homdyn_flow_new(const double *a,
                                  size_t m,
                                  const double *b,
                                  size_t n,
                                  struct HomdynFlow **out_flow);

// Releases a flow; null is ignored.
//
// # Safety
// `flow` must come from [`homdyn_flow_new`] and not be used afterwards.
void homdyn_flow_free(struct HomdynFlow *flow);

// Ambient dimension `d` and chart dimension `m·n` of a flow.
//
// # Safety
// `flow` must be a live handle; `d` and `chart_dim` must be writable.
enum HomdynStatus homdyn_flow_dims(const struct HomdynFlow *flow, size_t *d, size_t *chart_dim);

// The standard lattice `Z^d`.
//
// # Safety
// `out_lattice` must be writable.
enum HomdynStatus homdyn_lattice_standard(size_t d, struct HomdynLattice **out_lattice);

// The lattice spanned by the columns of the row-major `d×d` matrix `basis`,
// which must have determinant `±1`.
//
// # Safety
// `basis` must hold `d*d` doubles; `out_lattice` must be writable.
enum HomdynStatus homdyn_lattice_new(const double *basis,
                                     size_t d,
                                     struct HomdynLattice **out_lattice);

// Releases a lattice; null is ignored.
//
// # Safety
// `lattice` must come from this library and not be used afterwards.
void homdyn_lattice_free(struct HomdynLattice *lattice);

// Copies the row-major basis of a `d`-dimensional lattice into `basis[0..d*d]`.
//
// # Safety
// `lattice` must be live and `basis` must hold `d*d` writable doubles.
enum HomdynStatus homdyn_lattice_basis(const struct HomdynLattice *lattice,
                                       double *basis,
                                       size_t len);

// `g_t u(w) x`, renormalized and reduced.
//
// # Safety
// Handles must be live, `w` must hold `w_len` doubles and `out_lattice` must be writable.
enum HomdynStatus homdyn_apply_flow(const struct HomdynFlow *flow,
                                    const struct HomdynLattice *lattice,
                                    double t,
                                    const double *w,
                                    size_t w_len,
                                    struct HomdynLattice **out_lattice);

// Smallest covolume of a rank-`i` sublattice, `0 < i < d`.
//
// # Safety
// `lattice` must be live and `value` writable.
enum HomdynStatus homdyn_lattice_minimum(const struct HomdynLattice *lattice,
                                         size_t i,
                                         double *value);

// Height `α_ε` of a lattice for the given flow.
//
// # Safety
// Handles must be live and `value` writable.
enum HomdynStatus homdyn_height(const struct HomdynFlow *flow,
                                const struct HomdynLattice *lattice,
                                double epsilon,
                                double *value);

// Rate `θ` and cutoff `Q` of the large-deviation bound for a tail certificate `(C0, θ0)`.
//
// # Safety
// `theta` and `q` must be writable.
enum HomdynStatus homdyn_ld_constants(double c0,
                                      double theta0,
                                      double eps,
                                      double *theta,
                                      uint64_t *q);

// Root system of type `family` (`"A"`, .., `"G"`, `"BC"`) and the given rank.
//
// # Safety
// `family` must be a NUL-terminated string and `out_system` writable.
enum HomdynStatus homdyn_rootsys_new(const char *family,
                                     size_t rank,
                                     struct HomdynRootSystem **out_system);

// Releases a root system; null is ignored.
//
// # Safety
// `system` must come from [`homdyn_rootsys_new`] and not be used afterwards.
void homdyn_rootsys_free(struct HomdynRootSystem *system);

// Rank, ambient dimension and number of positive roots.
//
// # Safety
// `system` must be live and the outputs writable.
enum HomdynStatus homdyn_rootsys_shape(const struct HomdynRootSystem *system,
                                       size_t *rank,
                                       size_t *ambient,
                                       size_t *positive);

// Decomposes the dominated vector with nonnegative integer fundamental-weight
// coordinates `weights[0..rank]` as `Σ c_i β_i`. Writes the roots row-major into
// `betas[0..rank*ambient]`, the coefficients into `coeffs[0..rank]` and
// whether the independent verification passed into `verified`.
//
// # Safety
// `system` must be live and every buffer sized as described.
enum HomdynStatus homdyn_rootsys_decompose(const struct HomdynRootSystem *system,
                                           const int64_t *weights,
                                           size_t rank,
                                           double *betas,
                                           double *coeffs,
                                           bool *verified);

// Builds the expanding subalgebra for the traceless diagonal `z[0..d]` and
// runs the expanding check on its adjoint representation.
//
// # Safety
// `z` must hold `d` doubles; `passed` and `max_sine` must be writable.
enum HomdynStatus homdyn_expanding_check(const double *z, size_t d, bool *passed, double *max_sine);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOMDYN_H */
