#ifndef OCM_H
#define OCM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OcmStatus {
  OCM_STATUS_OK = 0,
  OCM_STATUS_NULL_POINTER = 1,
  OCM_STATUS_INVALID_UTF8 = 2,
  OCM_STATUS_PARSE = 3,
  OCM_STATUS_INVALID_ARGUMENT = 4,
  OCM_STATUS_SOLVER_FAILURE = 5,
  /*
   A certificate or condition check failed; outputs are still written.
   */
  OCM_STATUS_VIOLATION = 6,
  OCM_STATUS_PANIC = 7,
} OcmStatus;

typedef enum OcmSide {
  OCM_SIDE_LOWER = 0,
  OCM_SIDE_UPPER = 1,
} OcmSide;

typedef struct OcmGrid OcmGrid;

typedef struct OcmLattice OcmLattice;

typedef struct OcmPoset OcmPoset;

typedef struct OcmProblem OcmProblem;

typedef struct OcmSolution OcmSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or NULL. Valid until
 the next failing call on the same thread.
 */
const char *ocm_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *ocm_version(void);

/*
 # Safety
 `s` must be NULL or a string returned by this library.
 */
void ocm_string_free(char *s);

/*
 `[alo, ahi] <= [blo, bhi]` componentwise. Infinite endpoints are allowed.

 # Safety
 `out` must be valid for writes.
 */
enum OcmStatus ocm_interval_leq(double alo, double ahi, double blo, double bhi, bool *out);

/*
 Parse a poset in the `name: cover cover` line format.

 # Safety
 `text` must be a NUL-terminated string and `out` valid for writes.
 */
enum OcmStatus ocm_poset_parse(const char *text, struct OcmPoset **out);

/*
 # Safety
 `p` must be NULL or a handle from [`ocm_poset_parse`], freed at most once.
 */
void ocm_poset_free(struct OcmPoset *p);

/*
 Dedekind-MacNeille completion of `poset`.

 # Safety
 `poset` must be a live handle and `out` valid for writes.
 */
enum OcmStatus ocm_lattice_complete(const struct OcmPoset *poset, struct OcmLattice **out);

/*
 # Safety
 `lattice` must be a live handle and `out` valid for writes.
 */
enum OcmStatus ocm_lattice_cut_count(const struct OcmLattice *lattice, uintptr_t *out);

/*
 Graphviz rendering of the cut lattice. Free with [`ocm_string_free`].

 # Safety
 `lattice` must be a live handle and `out` valid for writes.
 */
enum OcmStatus ocm_lattice_to_dot(const struct OcmLattice *lattice, char **out);

/*
 # Safety
 `l` must be NULL or a handle from [`ocm_lattice_complete`], freed at most once.
 */
void ocm_lattice_free(struct OcmLattice *l);

/*
 Parse a `key = value` problem description.

 # Safety
 `text` must be a NUL-terminated string and `out` valid for writes.
 */
enum OcmStatus ocm_problem_parse(const char *text, struct OcmProblem **out);

/*
 # Safety
 `p` must be NULL or a handle from [`ocm_problem_parse`], freed at most once.
 */
void ocm_problem_free(struct OcmProblem *p);

/*
 Range-condition check on a lattice with `points_per_axis` points per
 axis. Writes the number of failing points; returns `Violation` if any.

 # Safety
 `problem` must be a live handle and `failed` valid for writes.
 */
enum OcmStatus ocm_check23(const struct OcmProblem *problem,
                           uintptr_t points_per_axis,
                           uintptr_t budget,
                           uintptr_t *failed);

/*
 Assemble a one-sided solution with tolerance `eps`.

 # Safety
 `problem` must be a live handle and `out` valid for writes.
 */
enum OcmStatus ocm_solve(const struct OcmProblem *problem,
                         double eps,
                         enum OcmSide side,
                         struct OcmSolution **out);

/*
 Parse a solution file written by [`ocm_solution_to_text`] for `problem`.

 # Safety
 Pointers must be live and valid as for the other entry points.
 */
enum OcmStatus ocm_solution_parse(const struct OcmProblem *problem,
                                  const char *text,
                                  struct OcmSolution **out);

/*
 # Safety
 `sol` must be a live handle and `out` valid for writes.
 */
enum OcmStatus ocm_solution_box_count(const struct OcmSolution *sol, uintptr_t *out);

/*
 Fresh-sample audit. Writes the residual range and violation count;
 returns `Violation` when the count is nonzero.

 # Safety
 `sol` must be a live handle; the out pointers must be valid for writes.
 */
enum OcmStatus ocm_solution_verify(const struct OcmSolution *sol,
                                   uintptr_t samples_per_box,
                                   uint64_t seed,
                                   double *min_residual,
                                   double *max_residual,
                                   uintptr_t *violations);

/*
 # Safety
 `sol` must be a live handle and `out` valid for writes.
 */
enum OcmStatus ocm_solution_to_text(const struct OcmSolution *sol, char **out);

/*
 # Safety
 `s` must be NULL or a solution handle, freed at most once.
 */
void ocm_solution_free(struct OcmSolution *s);

/*
 Parse the plain-text grid function format.

 # Safety
 `text` must be a NUL-terminated string and `out` valid for writes.
 */
enum OcmStatus ocm_grid_parse(const char *text, struct OcmGrid **out);

/*
 Graph completion from the grid's own mask.

 # Safety
 `grid` must be a live handle and `out` valid for writes.
 */
enum OcmStatus ocm_graph_completion(const struct OcmGrid *grid, struct OcmGrid **out);

/*
 # Safety
 `grid` must be a live handle and `out` valid for writes.
 */
enum OcmStatus ocm_is_h_continuous(const struct OcmGrid *grid, bool *out);

/*
 Interval value at node `index`.

 # Safety
 `grid` must be a live handle; `lo` and `hi` valid for writes.
 */
enum OcmStatus ocm_grid_value(const struct OcmGrid *grid, uintptr_t index, double *lo, double *hi);

/*
 # Safety
 `grid` must be a live handle and `out` valid for writes.
 */
enum OcmStatus ocm_grid_to_text(const struct OcmGrid *grid, char **out);

/*
 # Safety
 `g` must be NULL or a grid handle, freed at most once.
 */
void ocm_grid_free(struct OcmGrid *g);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OCM_H */
