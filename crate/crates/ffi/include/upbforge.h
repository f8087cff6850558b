#ifndef UPBFORGE_H
#define UPBFORGE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum UpbStatus {
  UPB_STATUS_OK = 0,
  UPB_STATUS_NULL_POINTER = 1,
  UPB_STATUS_INVALID_ARGUMENT = 2,
  UPB_STATUS_DIMENSION_MISMATCH = 3,
  UPB_STATUS_NOT_ORTHONORMAL = 4,
  UPB_STATUS_INFINITE_MEASURE = 5,
  UPB_STATUS_BUDGET_EXHAUSTED = 6,
  UPB_STATUS_BUFFER_TOO_SMALL = 7,
  UPB_STATUS_INTERNAL = 8,
} UpbStatus;

/**
 * Overlap of a real qubit product vector with the span of a product set.
 */
typedef struct UpbObjective UpbObjective;

/**
 * Orthonormal product vectors over a partition.
 */
typedef struct UpbProductSet UpbProductSet;

/**
 * A density operator on qubits.
 */
typedef struct UpbState UpbState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *upb_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *upb_version(void);

/**
 * The fixed 11-vector, 7-qubit table with explicit amplitudes.
 *
 * # Safety
 * `out_set` must be a valid pointer.
 */
enum UpbStatus upb_product_set_table(struct UpbProductSet **out_set);

/**
 * A random instantiation of the built-in symbolic matrix (`tilde` selects
 * the row- and column-permuted variant), seeded by `seed`.
 *
 * # Safety
 * `out_set` must be a valid pointer.
 */
enum UpbStatus upb_product_set_generic(uint64_t seed, bool tilde, struct UpbProductSet **out_set);

/**
 * # Safety
 * `set` must come from this library or be null.
 */
void upb_product_set_free(struct UpbProductSet *set);

/**
 * Number of vectors and dimension of the full space.
 *
 * # Safety
 * All pointers must be valid.
 */
enum UpbStatus upb_product_set_shape(const struct UpbProductSet *set, size_t *len, size_t *dim);

/**
 * Largest `|⟨φᵢ|φⱼ⟩ - δᵢⱼ|` over the set.
 *
 * # Safety
 * All pointers must be valid.
 */
enum UpbStatus upb_product_set_orthonormality_error(const struct UpbProductSet *set, double *err);

/**
 * Writes vector `i` in the global basis into `re[0..cap]` and `im[0..cap]`;
 * `cap` must be at least the dimension.
 *
 * # Safety
 * `re` and `im` must hold `cap` values.
 */
enum UpbStatus upb_product_set_global_vector(const struct UpbProductSet *set,
                                             size_t i,
                                             double *re,
                                             double *im,
                                             size_t cap);

/**
 * Searches for a product vector orthogonal to every vector of the set after
 * merging systems by `partition` (e.g. `"12|3|4|5|6|7"`). `found` is false
 * when the exhaustive search proves none exists among its candidates.
 *
 * # Safety
 * `partition` must be a NUL-terminated string; all pointers must be valid.
 */
enum UpbStatus upb_find_witness(const struct UpbProductSet *set,
                                const char *partition,
                                uint64_t budget,
                                bool *found,
                                double *max_residual);

/**
 * `(I - Σ|φᵢ⟩⟨φᵢ|)/(d - m)` for an orthonormal set.
 *
 * # Safety
 * All pointers must be valid.
 */
enum UpbStatus upb_state_new(const struct UpbProductSet *set,
                             double orth_tol,
                             struct UpbState **out_state);

/**
 * # Safety
 * `state` must come from this library or be null.
 */
void upb_state_free(struct UpbState *state);

/**
 * Trace and number of eigenvalues above `rank_tol`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum UpbStatus upb_state_diagnostics(const struct UpbState *state,
                                     double rank_tol,
                                     double *trace,
                                     size_t *rank);

/**
 * Smallest eigenvalue of the partial transpose over all bipartitions, and
 * whether it is at least `-psd_tol`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum UpbStatus upb_state_ppt(const struct UpbState *state,
                             double psd_tol,
                             double *min_eigenvalue,
                             bool *ppt);

/**
 * Closed-form determinant of the four-row submatrix parameterized by five angles.
 */
double upb_closed_form_determinant(double a1, double a2, double a3, double b1, double b2);

/**
 * Roots in `b2 ∈ [0, 2π)` of the determinant. Writes at most `cap` roots
 * and the total count.
 *
 * # Safety
 * `roots` must hold `cap` values.
 */
enum UpbStatus upb_determinant_roots(double a1,
                                     double a2,
                                     double a3,
                                     double b1,
                                     double *roots,
                                     size_t cap,
                                     size_t *count);

/**
 * Objective `x ↦ Σᵢ |⟨δ(x)|φᵢ⟩|²` with `δ(x) = ⊗ₛ (sin xₛ, cos xₛ)`.
 * The set must consist of qubit factors.
 *
 * # Safety
 * All pointers must be valid.
 */
enum UpbStatus upb_objective_new(const struct UpbProductSet *set, struct UpbObjective **out_obj);

/**
 * # Safety
 * `obj` must come from this library or be null.
 */
void upb_objective_free(struct UpbObjective *obj);

/**
 * # Safety
 * `x` must hold `n` values; all pointers must be valid.
 */
enum UpbStatus upb_objective_value(const struct UpbObjective *obj,
                                   const double *x,
                                   size_t n,
                                   double *value);

/**
 * Exact gradient of the objective.
 *
 * # Safety
 * `x` and `grad` must hold `n` values.
 */
enum UpbStatus upb_objective_gradient(const struct UpbObjective *obj,
                                      const double *x,
                                      size_t n,
                                      double *grad);

/**
 * Steepest descent from `x` (overwritten with the final point). `backtracking`
 * selects the monotone Armijo rule instead of the default quadratic model.
 *
 * # Safety
 * `x` must hold `n` values; all pointers must be valid.
 */
enum UpbStatus upb_steepest_descent(const struct UpbObjective *obj,
                                    double *x,
                                    size_t n,
                                    double step0,
                                    double gtol,
                                    size_t max_iter,
                                    bool backtracking,
                                    double *q_star,
                                    double *g_ebits,
                                    size_t *iterations,
                                    bool *converged);

/**
 * `-log₂((1 - q)/(d - m))`.
 *
 * # Safety
 * `ebits` must be valid.
 */
enum UpbStatus upb_to_ebits(double q, size_t d, size_t m, double *ebits);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UPBFORGE_H */
