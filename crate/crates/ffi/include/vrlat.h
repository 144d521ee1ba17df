#ifndef VRLAT_H
#define VRLAT_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VrlatStatus {
  VRLAT_STATUS_OK = 0,
  VRLAT_STATUS_NULL_POINTER = 1,
  VRLAT_STATUS_INVALID_SCENARIO = 2,
  VRLAT_STATUS_INVALID_ARGUMENT = 3,
  VRLAT_STATUS_INVALID_ALLOCATION = 4,
  VRLAT_STATUS_IO = 5,
  VRLAT_STATUS_PANIC = 6,
} VrlatStatus;

/**
 * Opaque scenario handle.
 */
typedef struct VrlatScenario VrlatScenario;

/**
 * Opaque optimizer trace handle.
 */
typedef struct VrlatTrace VrlatTrace;

/**
 * User counts `N11, N12, N21, N22`.
 */
typedef struct VrlatCounts {
  uint32_t n[4];
} VrlatCounts;

/**
 * Per-user uplink and per-group downlink bandwidths in Hz, NaN when absent.
 */
typedef struct VrlatAllocation {
  double up[4];
  double dn[4];
} VrlatAllocation;

typedef struct VrlatReport {
  double upload_s[2];
  double upload_stderr_s[2];
  double compute_s[2];
  double download_s[4];
  double total_s[4];
  double weighted_total_s;
  double weighted_stderr_s;
  uint64_t samples_used;
} VrlatReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *vrlat_last_error_message(void);

/**
 * Scenario with the reference parameter set.
 */
struct VrlatScenario *vrlat_scenario_new_reference(void);

/**
 * Parses the `[scenario]` section of a TOML config held in `text`.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum VrlatStatus vrlat_scenario_from_toml(const char *text, struct VrlatScenario **out);

/**
 * # Safety
 * `scenario` must come from this library and not be used afterwards.
 */
void vrlat_scenario_free(struct VrlatScenario *scenario);

/**
 * # Safety
 * `scenario` must be a valid handle.
 */
uint32_t vrlat_scenario_total_users(const struct VrlatScenario *scenario);

/**
 * Symmetric layout for cross-type ratio `rho_c`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum VrlatStatus vrlat_symmetric_configuration(uint32_t n_total,
                                               double rho_c,
                                               struct VrlatCounts *out);

/**
 * # Safety
 * All pointers must be valid.
 */
enum VrlatStatus vrlat_equal_baseline(const struct VrlatScenario *scenario,
                                      const struct VrlatCounts *counts,
                                      struct VrlatAllocation *out);

/**
 * Square-root downlink split; writes four bandwidths into `out_dn`.
 *
 * # Safety
 * `counts` must be valid and `out_dn` must point to four doubles.
 */
enum VrlatStatus vrlat_optimize_downlink(const struct VrlatCounts *counts,
                                         double w_total,
                                         double *out_dn);

/**
 * Projection of `w_tilde[2]` onto `{w >= 0 : n[0] w[0] + n[1] w[1] = w_total}`.
 *
 * # Safety
 * `w_tilde`, `n` and `out` must each point to two elements.
 */
enum VrlatStatus vrlat_project_uplink(const double *w_tilde,
                                      const uint32_t *n,
                                      double w_total,
                                      double *out);

/**
 * Latency report for `alloc` using `samples` Monte-Carlo draws from `seed`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum VrlatStatus vrlat_evaluate(const struct VrlatScenario *scenario,
                                const struct VrlatCounts *counts,
                                const struct VrlatAllocation *alloc,
                                size_t samples,
                                uint64_t seed,
                                struct VrlatReport *out);

/**
 * Runs the uplink optimizer. `step_scale` is the multiplier `c` of the
 * scaled step size. On success `*out_trace` receives a trace handle whose
 * best iterate is the returned allocation.
 *
 * # Safety
 * All pointers must be valid.
 */
enum VrlatStatus vrlat_optimize_uplink(const struct VrlatScenario *scenario,
                                       const struct VrlatCounts *counts,
                                       size_t t_samples,
                                       size_t k_iters,
                                       double step_scale,
                                       uint64_t seed,
                                       struct VrlatTrace **out_trace);

/**
 * # Safety
 * `trace` must come from this library and not be used afterwards.
 */
void vrlat_trace_free(struct VrlatTrace *trace);

/**
 * Number of iterates, including the starting point.
 *
 * # Safety
 * `trace` must be a valid handle.
 */
size_t vrlat_trace_len(const struct VrlatTrace *trace);

/**
 * # Safety
 * `trace` must be a valid handle.
 */
size_t vrlat_trace_best_index(const struct VrlatTrace *trace);

/**
 * Sample-average objective of iterate `k`, NaN when out of range.
 *
 * # Safety
 * `trace` must be a valid handle.
 */
double vrlat_trace_objective(const struct VrlatTrace *trace, size_t k);

/**
 * Writes the four uplink bandwidths of iterate `k` into `out_up`.
 *
 * # Safety
 * `trace` must be a valid handle and `out_up` point to four doubles.
 */
enum VrlatStatus vrlat_trace_iterate(const struct VrlatTrace *trace, size_t k, double *out_up);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VRLAT_H */
