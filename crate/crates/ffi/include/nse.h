#ifndef NSE_FFI_H
#define NSE_FFI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NseStatus {
  NSE_STATUS_OK = 0,
  NSE_STATUS_NULL_POINTER = 1,
  NSE_STATUS_INVALID_ARGUMENT = 2,
  NSE_STATUS_SINGULAR = 3,
  NSE_STATUS_INSUFFICIENT_DATA = 4,
  NSE_STATUS_INTERNAL = 5,
  NSE_STATUS_PANIC = 6,
} NseStatus;

typedef enum NseScenario {
  NSE_SCENARIO_ANALYTICAL = 0,
  NSE_SCENARIO_CAVITY2D = 1,
} NseScenario;

typedef enum NseMethod {
  NSE_METHOD_PICARD = 0,
  NSE_METHOD_NEWTON = 1,
  NSE_METHOD_NEWTON_LINE_SEARCH = 2,
  NSE_METHOD_PICARD_NEWTON = 3,
  NSE_METHOD_AA_PICARD_NEWTON = 4,
  NSE_METHOD_ANDERSON_PICARD = 5,
} NseMethod;

typedef enum NseTermination {
  NSE_TERMINATION_CONVERGED = 0,
  /**
   * No convergence within the iteration budget.
   */
  NSE_TERMINATION_FAILED = 1,
  /**
   * Residual exceeded the blowup threshold.
   */
  NSE_TERMINATION_BLOWUP = 2,
  NSE_TERMINATION_SINGULAR_LINEARIZATION = 3,
} NseTermination;

typedef struct NseProblem NseProblem;

typedef struct NseSolution NseSolution;

/**
 * Refined square mesh with its velocity/pressure space.
 */
typedef struct NseSpace NseSpace;

/**
 * Solver settings. Fill with [`nse_solver_options_default`] first.
 */
typedef struct NseSolverOptions {
  enum NseMethod method;
  double tolerance;
  uint32_t max_iterations;
  double blowup_threshold;
  /**
   * Gate on the H1 seminorm residual instead of L2.
   */
  bool gate_h1;
  /**
   * Constant interior initial velocity.
   */
  double initial_x;
  double initial_y;
  /**
   * Depth and damping, used by `AndersonPicard` only.
   */
  uint32_t aa_depth;
  double aa_damping;
} NseSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *nse_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *nse_version(void);

/**
 * Builds the barycenter-refined `n x n` unit-square mesh and its space.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum NseStatus nse_space_new(uint32_t n, struct NseSpace **out);

/**
 * # Safety
 * `space` must be NULL or a handle from [`nse_space_new`] not yet freed.
 */
void nse_space_free(struct NseSpace *space);

/**
 * Number of velocity dofs (both components), or 0 for NULL.
 *
 * # Safety
 * `space` must be NULL or a live handle.
 */
size_t nse_space_num_velocity_dofs(const struct NseSpace *space);

/**
 * # Safety
 * `space` must be NULL or a live handle.
 */
size_t nse_space_num_pressure_dofs(const struct NseSpace *space);

/**
 * Builds a benchmark problem on `space` with viscosity `1 / re`.
 *
 * # Safety
 * `space` must be a live handle and `out` writable storage for one handle.
 */
enum NseStatus nse_problem_new(const struct NseSpace *space,
                               enum NseScenario scenario,
                               double re,
                               struct NseProblem **out);

/**
 * # Safety
 * `problem` must be NULL or a handle from [`nse_problem_new`] not yet freed.
 */
void nse_problem_free(struct NseProblem *problem);

/**
 * Defaults: Picard-Newton, tolerance 1e-8 (L2), 200 iterations, blowup 1e4,
 * zero initial guess, AA depth 1 without damping.
 *
 * # Safety
 * `out` must point to writable storage for one options struct.
 */
enum NseStatus nse_solver_options_default(struct NseSolverOptions *out);

/**
 * Runs the nonlinear solver. Non-convergence is not an error: inspect
 * [`nse_solution_termination`].
 *
 * # Safety
 * `problem` and `options` must be valid pointers; `out` writable storage for
 * one handle.
 */
enum NseStatus nse_solve(const struct NseProblem *problem,
                         const struct NseSolverOptions *options,
                         struct NseSolution **out);

/**
 * # Safety
 * `solution` must be NULL or a handle from [`nse_solve`] not yet freed.
 */
void nse_solution_free(struct NseSolution *solution);

/**
 * # Safety
 * `solution` must be a live handle; `out` writable.
 */
enum NseStatus nse_solution_termination(const struct NseSolution *solution,
                                        enum NseTermination *out);

/**
 * Number of recorded iterations, or 0 for NULL.
 *
 * # Safety
 * `solution` must be NULL or a live handle.
 */
size_t nse_solution_iterations(const struct NseSolution *solution);

/**
 * Copies the L2 and H1 residual histories. Either output may be NULL;
 * non-NULL outputs must hold `len >= nse_solution_iterations` values.
 *
 * # Safety
 * `solution` must be a live handle; outputs NULL or valid for `len` doubles.
 */
enum NseStatus nse_solution_residuals(const struct NseSolution *solution,
                                      double *res_l2,
                                      double *res_h1,
                                      size_t len);

/**
 * Copies the final velocity coefficients (x components of all nodes, then
 * y components).
 *
 * # Safety
 * `solution` must be a live handle; `out` valid for `len` doubles.
 */
enum NseStatus nse_solution_velocity(const struct NseSolution *solution, double *out, size_t len);

/**
 * Velocity L2 error against the exact solution (analytical scenario only).
 *
 * # Safety
 * `solution` must be a live handle; `out` writable.
 */
enum NseStatus nse_solution_l2_error(const struct NseSolution *solution, double *out);

/**
 * Least-squares convergence order of a residual sequence over its last
 * `tail` entries above 1e-12.
 *
 * # Safety
 * `residuals` must be valid for `len` doubles; `out` writable.
 */
enum NseStatus nse_estimate_order(const double *residuals, size_t len, size_t tail, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NSE_FFI_H */
