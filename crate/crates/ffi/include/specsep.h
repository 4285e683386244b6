#ifndef SPECSEP_H
#define SPECSEP_H

#include <stddef.h>
#include <stdint.h>

// Eigenvalues above the gap for pairs with `h < -1`.
#define SPECSEP_CONVENTION_DERIVATION 0

// Eigenvalues below the gap for pairs with `h < -1`.
#define SPECSEP_CONVENTION_THEOREM 1

typedef enum SpecsepStatus {
  SPECSEP_STATUS_OK = 0,
  SPECSEP_STATUS_NULL_POINTER = 1,
  SPECSEP_STATUS_INVALID_ARGUMENT = 2,
  SPECSEP_STATUS_SOLVER_FAILURE = 3,
  SPECSEP_STATUS_POLE = 4,
  SPECSEP_STATUS_PANIC = 5,
} SpecsepStatus;

// Opaque list of gaps returned by [`specsep_find_gaps`].
typedef struct SpecsepGapList SpecsepGapList;

// Opaque model handle.
typedef struct SpecsepModel SpecsepModel;

// One gap `(a, b)`. An unbounded gap has `b = +inf`; a gap reaching down to
// zero from the `g -> -inf` end has `g_a = -inf`.
typedef struct SpecsepGap {
  double a;
  double b;
  double g_a;
  double g_b;
  double y;
} SpecsepGap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread, or NULL if none. The pointer
// stays valid until the next failing call on the same thread.
const char *specsep_last_error_message(void);

// Builds a model from `n_atoms` atoms `(u[k], t[k], weight[k])` and aspect
// ratio `y` in `(0, 1]`. Default solver settings are used.
//
// # Safety
// `u`, `t` and `weight` must point to `n_atoms` readable doubles and `out`
// to a writable handle slot.
enum SpecsepStatus specsep_model_new(const double *u,
                                     const double *t,
                                     const double *weight,
                                     size_t n_atoms,
                                     double y,
                                     struct SpecsepModel **out);

// Releases a model. NULL is ignored.
//
// # Safety
// `model` must come from [`specsep_model_new`] and not be used afterwards.
void specsep_model_free(struct SpecsepModel *model);

// Replaces the solver settings.
//
// # Safety
// `model` must be a live handle.
enum SpecsepStatus specsep_model_set_solver(struct SpecsepModel *model,
                                            double tol,
                                            size_t max_iter,
                                            double damping,
                                            double v_start,
                                            double v_min);

// Companion pair at `z = re + i im` (`im > 0`), written as
// `{Re s, Im s, Re g, Im g}`.
//
// # Safety
// `model` must be a live handle and `out` must point to 4 writable doubles.
enum SpecsepStatus specsep_solve_at(const struct SpecsepModel *model,
                                    double re,
                                    double im,
                                    double *out);

// Limit of the companion pair at the real point `x != 0`, written as
// `{Re s, Im s, Re g, Im g}`.
//
// # Safety
// `model` must be a live handle and `out` must point to 4 writable doubles.
enum SpecsepStatus specsep_boundary_value(const struct SpecsepModel *model, double x, double *out);

// Density of the limiting distribution at `n` points. Points where the
// solve failed are set to NaN; the call still returns OK.
//
// # Safety
// `xs` must point to `n` readable doubles and `out_f` to `n` writable ones.
enum SpecsepStatus specsep_density(const struct SpecsepModel *model,
                                   const double *xs,
                                   size_t n,
                                   double *out_f);

// Sweeps for the gaps of the support.
//
// # Safety
// `model` must be a live handle and `out` a writable handle slot.
enum SpecsepStatus specsep_find_gaps(const struct SpecsepModel *model, struct SpecsepGapList **out);

// Number of gaps in the list; 0 for NULL.
//
// # Safety
// `list` must be NULL or a live handle.
size_t specsep_gap_list_len(const struct SpecsepGapList *list);

// Copies gap `index` (ascending in `a`) into `out`.
//
// # Safety
// `list` must be a live handle and `out` writable.
enum SpecsepStatus specsep_gap_list_get(const struct SpecsepGapList *list,
                                        size_t index,
                                        struct SpecsepGap *out);

// Releases a gap list. NULL is ignored.
//
// # Safety
// `list` must come from [`specsep_find_gaps`] and not be used afterwards.
void specsep_gap_list_free(struct SpecsepGapList *list);

// Predicted number of eigenvalues of a `p × p` realization below and above
// `gap` under `convention` (one of the `SPECSEP_CONVENTION_*` values).
//
// # Safety
// `model` must be a live handle; `gap`, `below` and `above` valid pointers.
enum SpecsepStatus specsep_predict_counts(const struct SpecsepModel *model,
                                          const struct SpecsepGap *gap,
                                          size_t p,
                                          int32_t convention,
                                          size_t *below,
                                          size_t *above);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECSEP_H */
