#ifndef SPHERETV_H
#define SPHERETV_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StvStatus {
  STV_STATUS_OK = 0,
  STV_STATUS_INVALID_ARGUMENT = 1,
  STV_STATUS_NULL_POINTER = 2,
  STV_STATUS_DEGENERATE = 3,
  STV_STATUS_RESOURCE_LIMIT = 4,
  STV_STATUS_PARSE = 5,
  STV_STATUS_IO = 6,
  STV_STATUS_PANIC = 7,
} StvStatus;

typedef enum StvStopReason {
  STV_STOP_REASON_RESIDUAL = 0,
  STV_STOP_REASON_SPHERE = 1,
  STV_STOP_REASON_MAX_ITER = 2,
} StvStopReason;

/**
 * Opaque graph handle.
 */
typedef struct StvGraph StvGraph;

/**
 * Opaque signal handle.
 */
typedef struct StvSignal StvSignal;

/**
 * Solver settings. `tol_sphere = 0` disables the sphere-distance stop.
 */
typedef struct StvSolverConfig {
  double lambda;
  double rho;
  size_t max_iter;
  double tol_residual;
  double tol_sphere;
  size_t dykstra_max_iter;
  double dykstra_tol;
  size_t dual_max_iter;
  double dual_tol;
} StvSolverConfig;

typedef struct StvSolverReport {
  size_t iterations;
  double final_residual;
  double final_sphere_distance;
  double final_objective_k;
  double wall_time_sec;
  enum StvStopReason stop_reason;
} StvSolverReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *stv_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *stv_version(void);

/**
 * Default settings: λ = 1, ρ = 1, 10000 iterations, tolerances 1e-6 and 1e-5.
 */
struct StvSolverConfig stv_solver_config_default(void);

/**
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum StvStatus stv_graph_chain(size_t n, struct StvGraph **out);

/**
 * Row-major `rows × cols` grid with 4-neighbour edges.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum StvStatus stv_graph_grid(size_t rows, size_t cols, struct StvGraph **out);

/**
 * Connected graph from `num_edges` pairs stored flat in `edges`
 * (`2·num_edges` entries).
 *
 * # Safety
 * `edges` must point to `2·num_edges` readable values; `out` as above.
 */
enum StvStatus stv_graph_general(size_t num_vertices,
                                 const size_t *edges,
                                 size_t num_edges,
                                 struct StvGraph **out);

/**
 * # Safety
 * `graph` must be null or a handle from a `stv_graph_*` constructor that
 * has not been freed.
 */
void stv_graph_free(struct StvGraph *graph);

/**
 * # Safety
 * `graph` must be a live handle.
 */
size_t stv_graph_num_vertices(const struct StvGraph *graph);

/**
 * # Safety
 * `graph` must be a live handle.
 */
size_t stv_graph_num_edges(const struct StvGraph *graph);

/**
 * Signal of `len` vertices in `R^dim`, copied from `values` (vertex-major,
 * `dim·len` entries).
 *
 * # Safety
 * `values` must point to `dim·len` readable doubles; `out` as above.
 */
enum StvStatus stv_signal_new(size_t dim, size_t len, const double *values, struct StvSignal **out);

/**
 * # Safety
 * `signal` must be null or a live handle.
 */
void stv_signal_free(struct StvSignal *signal);

/**
 * # Safety
 * `signal` must be a live handle.
 */
size_t stv_signal_dim(const struct StvSignal *signal);

/**
 * # Safety
 * `signal` must be a live handle.
 */
size_t stv_signal_len(const struct StvSignal *signal);

/**
 * Copies the `dim·len` values into `out`, which holds `capacity` doubles.
 *
 * # Safety
 * `signal` must be a live handle and `out` must hold `capacity` doubles.
 */
enum StvStatus stv_signal_copy_values(const struct StvSignal *signal, double *out, size_t capacity);

/**
 * Mean absolute deviation of the vertex norms from 1.
 *
 * # Safety
 * `signal` must be a live handle; `out` must be writable.
 */
enum StvStatus stv_sphere_distance(const struct StvSignal *signal, double *out);

/**
 * Vertexwise normalisation; zero vertices give `STV_STATUS_DEGENERATE`.
 *
 * # Safety
 * `signal` must be a live handle; `out` as above.
 */
enum StvStatus stv_project_sphere(const struct StvSignal *signal, struct StvSignal **out);

/**
 * Thresholding `x ↦ +1 if x > η else −1` of a scalar signal.
 *
 * # Safety
 * `signal` must be a live handle; `out` as above.
 */
enum StvStatus stv_characteristic(const struct StvSignal *signal,
                                  double eta,
                                  struct StvSignal **out);

/**
 * Exact 1D TV prox of `z` with weight `gamma`, written to `out` (`n` values).
 *
 * # Safety
 * `z` and `out` must each hold `n` doubles.
 */
enum StvStatus stv_tv_prox_1d(const double *z, size_t n, double gamma, double *out);

/**
 * Runs ADMM on data `y` over `graph`; stores the solution in `*out` and,
 * when `report` is non-null, the run summary in `*report`.
 *
 * # Safety
 * `y` and `graph` must be live handles, `config` readable, `out` writable,
 * `report` null or writable.
 */
enum StvStatus stv_admm_solve(const struct StvSignal *y,
                              const struct StvGraph *graph,
                              const struct StvSolverConfig *config,
                              struct StvSignal **out,
                              struct StvSolverReport *report);

/**
 * Coordinatewise TV prox with weight `lambda`, followed by sphere projection
 * when `project` is non-zero.
 *
 * # Safety
 * `y` and `graph` must be live handles; `out` writable.
 */
enum StvStatus stv_fast_tv(const struct StvSignal *y,
                           const struct StvGraph *graph,
                           double lambda,
                           int32_t project,
                           struct StvSignal **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPHERETV_H */
