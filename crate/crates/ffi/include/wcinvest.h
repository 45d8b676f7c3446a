#ifndef WCINVEST_H
#define WCINVEST_H

/* Generated by cbindgen from the wcinvest-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every fallible call.
 */
typedef enum WciStatus {
  WCI_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  WCI_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  WCI_STATUS_INVALID_UTF8 = 2,
  /**
   * Arguments violate a model or configuration invariant.
   */
  WCI_STATUS_INVALID_ARGUMENT = 3,
  /**
   * Arguments left the mathematical domain of an operation.
   */
  WCI_STATUS_DOMAIN_ERROR = 4,
  /**
   * A numerical routine failed.
   */
  WCI_STATUS_SOLVER_ERROR = 5,
  /**
   * File output failed.
   */
  WCI_STATUS_IO_ERROR = 6,
  /**
   * The library panicked; the handle states are unchanged.
   */
  WCI_STATUS_PANIC = 7,
} WciStatus;

/**
 * Opaque market model handle.
 */
typedef struct WciModel WciModel;

/**
 * Opaque simulated-paths handle.
 */
typedef struct WciPaths WciPaths;

/**
 * Opaque solved-surface handle (exposure and policy on one grid).
 */
typedef struct WciSurface WciSurface;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *wci_last_error(void);

/**
 * Create a model from a preset name (`a`, `b`, `c`, `d` or `ko`).
 *
 * # Safety
 * `name` must be a valid NUL-terminated string; `out` must be valid for
 * a single pointer write.
 */
enum WciStatus wci_model_preset(const char *name, struct WciModel **out);

/**
 * Create a model from flat `key = value` configuration text (same
 * format as the CLI config files).
 *
 * # Safety
 * `text` must be a valid NUL-terminated string; `out` must be valid for
 * a single pointer write.
 */
enum WciStatus wci_model_from_config(const char *text, struct WciModel **out);

/**
 * # Safety
 * `model` must be a pointer previously returned by this library, or null.
 */
void wci_model_free(struct WciModel *model);

/**
 * Assumption report. Quantities that do not apply (e.g. the Feller
 * index of a non-CIR factor) come back as NaN.
 *
 * # Safety
 * `model` must be a live model handle; out-pointers may be null when the
 * corresponding value is not wanted.
 */
enum WciStatus wci_model_conditions(const struct WciModel *model,
                                    double *feller_index,
                                    double *exp_moment_threshold,
                                    double *admissible_cap);

/**
 * Post-crash optimal allocation at factor value `x`.
 *
 * # Safety
 * `model` must be a live model handle; `out` must be valid for a write.
 */
enum WciStatus wci_model_merton(const struct WciModel *model, double x, double *out);

/**
 * Generator `f(x, y)` of the backward exposure equation.
 *
 * # Safety
 * `model` must be a live model handle; `out` must be valid for a write.
 */
enum WciStatus wci_model_generator(const struct WciModel *model, double x, double y, double *out);

/**
 * Solve the exposure PDE. Pass 0 for `n_t` or `n_x` to use the
 * production defaults (1000 and 200).
 *
 * # Safety
 * `model` must be a live model handle; `out` must be valid for a single
 * pointer write.
 */
enum WciStatus wci_solve(const struct WciModel *model,
                         uint32_t n_t,
                         uint32_t n_x,
                         struct WciSurface **out);

/**
 * # Safety
 * `surface` must be a pointer previously returned by this library, or null.
 */
void wci_surface_free(struct WciSurface *surface);

/**
 * Exposure `v(t, x)` by bilinear interpolation (x clamps to the grid).
 *
 * # Safety
 * `surface` must be a live surface handle; `out` must be valid for a write.
 */
enum WciStatus wci_surface_exposure_at(const struct WciSurface *surface,
                                       double t,
                                       double x,
                                       double *out);

/**
 * Allocation `pi(t, x)` by bilinear interpolation (x clamps to the grid).
 *
 * # Safety
 * `surface` must be a live surface handle; `out` must be valid for a write.
 */
enum WciStatus wci_surface_policy_at(const struct WciSurface *surface,
                                     double t,
                                     double x,
                                     double *out);

/**
 * Exposure at `(0, z0)`: the initial utility crash exposure of the model.
 *
 * # Safety
 * `surface` must be a live surface handle; `out` must be valid for a write.
 */
enum WciStatus wci_surface_initial_exposure(const struct WciSurface *surface, double *out);

/**
 * Write the exposure (`as_policy = false`) or allocation surface
 * (`as_policy = true`) as long-format CSV `t,x,v`.
 *
 * # Safety
 * `surface` must be a live surface handle; `path` a valid NUL-terminated
 * string.
 */
enum WciStatus wci_surface_write_csv(const struct WciSurface *surface,
                                     const char *path,
                                     bool as_policy);

/**
 * Simulate factor paths on a uniform grid with per-path substreams.
 *
 * # Safety
 * `model` must be a live model handle; `out` must be valid for a single
 * pointer write.
 */
enum WciStatus wci_simulate(const struct WciModel *model,
                            uint32_t n_paths,
                            uint32_t n_steps,
                            uint64_t seed,
                            struct WciPaths **out);

/**
 * # Safety
 * `paths` must be a pointer previously returned by this library, or null.
 */
void wci_paths_free(struct WciPaths *paths);

/**
 * Number of simulated paths.
 *
 * # Safety
 * `paths` must be a live paths handle (null returns 0).
 */
uint32_t wci_paths_count(const struct WciPaths *paths);

/**
 * Number of grid points per path (steps + 1).
 *
 * # Safety
 * `paths` must be a live paths handle (null returns 0).
 */
size_t wci_paths_len(const struct WciPaths *paths);

/**
 * Copy the time grid into `buf` (length from [`wci_paths_len`]).
 *
 * # Safety
 * `buf` must be valid for `len` writes.
 */
enum WciStatus wci_paths_times(const struct WciPaths *paths, double *buf, size_t len);

/**
 * Copy one path's factor values into `buf` (length from [`wci_paths_len`]).
 *
 * # Safety
 * `buf` must be valid for `len` writes.
 */
enum WciStatus wci_paths_values(const struct WciPaths *paths,
                                uint32_t path,
                                double *buf,
                                size_t len);

/**
 * Write paths as CSV (`t,path0,path1,...`).
 *
 * # Safety
 * `paths` must be a live paths handle; `path` a valid NUL-terminated
 * string.
 */
enum WciStatus wci_paths_write_csv(const struct WciPaths *paths, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WCINVEST_H */
