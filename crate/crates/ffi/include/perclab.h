#ifndef PERCLAB_H
#define PERCLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes. `PL_OK` is zero; all other values are failures.
typedef enum PlStatus {
  PL_OK = 0,
  PL_ERR_PARAMETER = 1,
  PL_ERR_ADDRESS = 2,
  PL_ERR_RESOURCE = 3,
  PL_ERR_UNSUPPORTED = 4,
  PL_ERR_PRECONDITION = 5,
  PL_ERR_NUMERIC = 6,
  PL_ERR_CONSTRUCTION = 7,
  PL_ERR_DEGENERATE_SLAB = 8,
  PL_ERR_IO = 9,
  // A required pointer argument was null.
  PL_ERR_NULL = 10,
  // A string argument was not valid UTF-8.
  PL_ERR_UTF8 = 11,
  // The library panicked; this is a bug.
  PL_ERR_PANIC = 12,
} PlStatus;

// A bond percolation configuration on a window.
typedef struct PlConfig PlConfig;

// A graph family.
typedef struct PlFamily PlFamily;

// A finite window (ball) of a family.
typedef struct PlWindow PlWindow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Valid until the next
// call into the library from the same thread.
const char *pl_last_error(void);

// Library version as a static string.
const char *pl_version(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void pl_string_free(char *s);

// Creates a family from its JSON description, e.g.
// `{"name": "oriented_tree", "params": {"n1": 1, "n2": 2}}`.
//
// # Safety
// `json` must be a NUL-terminated string; `out_family` must be writable.
enum PlStatus pl_family_from_json(const char *json, struct PlFamily **out_family);

// Creates the oriented tree `T_{n1+n2+1}` with its `(1, n1, n2)` orientation.
//
// # Safety
// `out_family` must be writable.
enum PlStatus pl_family_oriented_tree(uint32_t n1, uint32_t n2, struct PlFamily **out_family);

// # Safety
// `family` must come from this library and not be freed twice.
void pl_family_free(struct PlFamily *family);

// # Safety
// Pointers must be valid.
enum PlStatus pl_family_orbit_count(const struct PlFamily *family, size_t *out_count);

// Modular base as an exact `"num/den"` string (free with `pl_string_free`).
//
// # Safety
// Pointers must be valid.
enum PlStatus pl_family_modular_base(const struct PlFamily *family, char **out_base);

// Ball of the given radius around the family's origin.
//
// # Safety
// Pointers must be valid.
enum PlStatus pl_window_ball(const struct PlFamily *family,
                             uint32_t radius,
                             struct PlWindow **out_window);

// # Safety
// `window` must come from this library and not be freed twice.
void pl_window_free(struct PlWindow *window);

// Vertex and edge counts of a window.
//
// # Safety
// Pointers must be valid.
enum PlStatus pl_window_size(const struct PlWindow *window,
                             size_t *out_vertices,
                             size_t *out_edges);

// Versioned JSON serialization of a window (free with `pl_string_free`).
//
// # Safety
// Pointers must be valid.
enum PlStatus pl_window_to_json(const struct PlWindow *window, char **out_json);

// Samples trial `trial` of the configuration keyed by `seed` at density `p`.
//
// # Safety
// Pointers must be valid.
enum PlStatus pl_config_sample(const struct PlWindow *window,
                               double p,
                               uint64_t seed,
                               uint64_t trial,
                               struct PlConfig **out_config);

// # Safety
// `config` must come from this library and not be freed twice.
void pl_config_free(struct PlConfig *config);

// Number of open edges.
//
// # Safety
// Pointers must be valid.
enum PlStatus pl_config_open_count(const struct PlConfig *config, size_t *out_count);

// Size of the open cluster of window vertex `vertex` (0 is the center).
//
// # Safety
// Pointers must be valid.
enum PlStatus pl_config_cluster_size(const struct PlConfig *config,
                                     size_t vertex,
                                     size_t *out_size);

// Effective conductance from window vertex `vertex` to the sphere of radius
// `radius` around it, through open edges with unit conductances.
//
// # Safety
// Pointers must be valid.
enum PlStatus pl_config_effective_conductance(const struct PlConfig *config,
                                              size_t vertex,
                                              uint32_t radius,
                                              double *out_conductance);

// Monte Carlo estimate of the probability that the origin connects to the
// vertex at `distance` along the canonical geodesic.
//
// # Safety
// Pointers must be valid.
enum PlStatus pl_connectivity_estimate(const struct PlFamily *family,
                                       double p,
                                       uint32_t distance,
                                       uint64_t trials,
                                       uint64_t seed,
                                       double *out_p_hat,
                                       double *out_se);

// Closed-form `p_h` of the oriented tree with parameters `(n1, n2)`.
//
// # Safety
// `out_value` must be writable.
enum PlStatus pl_ph_closed_form(uint32_t n1, uint32_t n2, double *out_value);

// Lower bound on `p_u` of `T_{b+1} × Z`.
//
// # Safety
// `out_value` must be writable.
enum PlStatus pl_pu_lower_bound(uint32_t b, double *out_value);

// Perron root `λ*` of the slab with `n + 1` levels of the `(n1, n2)`
// oriented tree. Fails with `PL_ERR_DEGENERATE_SLAB` for `n = 0`.
//
// # Safety
// `out_lambda` must be writable.
enum PlStatus pl_slab_spectral_radius(uint32_t n1, uint32_t n2, uint32_t n, double *out_lambda);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PERCLAB_H */
