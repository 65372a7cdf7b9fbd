/* C interface to the gss4d constellation-design and link-evaluation library. */

#ifndef GSS4D_H
#define GSS4D_H

/* Generated by cbindgen from gss4d-ffi; edit src/lib.rs, not this file. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible entry point.
typedef enum Gss4dStatus {
  GSS4D_STATUS_OK = 0,
  // A required pointer argument was null.
  GSS4D_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  GSS4D_STATUS_INVALID_UTF8 = 2,
  // A numeric argument or state was outside its domain.
  GSS4D_STATUS_DOMAIN = 3,
  // A configuration was structurally invalid.
  GSS4D_STATUS_CONFIG = 4,
  // An input was degenerate (for example, zero received power).
  GSS4D_STATUS_DEGENERATE = 5,
  // An estimator had too little data to produce a result.
  GSS4D_STATUS_ESTIMATION = 6,
  // A constellation file failed to parse.
  GSS4D_STATUS_PARSE = 7,
  // The adaptive fiber stepper underflowed its minimum step.
  GSS4D_STATUS_STEP_UNDERFLOW = 8,
  // An I/O operation failed.
  GSS4D_STATUS_IO = 9,
  // Serialization or deserialization failed.
  GSS4D_STATUS_SERDE = 10,
  // A panic was caught at the boundary.
  GSS4D_STATUS_PANIC = 11,
  // An output buffer was too small.
  GSS4D_STATUS_BUFFER_TOO_SMALL = 12,
} Gss4dStatus;

// An owned run configuration. Opaque; create, mutate, and free only
// through `gss4d_config_*`.
typedef struct gss4d_config gss4d_config;

// An owned constellation. Opaque; create and free only through
// `gss4d_constellation_*`.
typedef struct gss4d_constellation gss4d_constellation;

// A mutual-information estimate and the evaluation's side figures.
typedef struct Gss4dLinkResult {
  // Mutual information, bits per 4D symbol.
  double mi_bits_per_4d;
  // Monte-Carlo standard error of `mi_bits_per_4d`.
  double mi_stderr;
  // Fitted per-4D-symbol noise variance.
  double sigma2;
  // Symbols that entered the estimate after edge discard.
  uint64_t n_symbols;
  // Symbol-domain peak-to-average power ratio (linear).
  double papr_symbol;
  // Transmit-waveform peak-to-average power ratio, dB.
  double papr_waveform_db;
} Gss4dLinkResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the message of the most recent error on this thread into `buf`
// (NUL-terminated, truncated to `cap` bytes). Returns the full message
// length in bytes, excluding the terminator; call with a null `buf` or
// zero `cap` to query the length.
//
// # Safety
// `buf` must be null or point to at least `cap` writable bytes.
size_t gss4d_last_error_message(char *buf, size_t cap);

// Creates a configuration with the library defaults. Never fails.
struct gss4d_config *gss4d_config_default(void);

// Loads a TOML configuration from `path` into `*out`.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be a valid pointer.
enum Gss4dStatus gss4d_config_load(const char *path, struct gss4d_config **out);

// Replaces the master seed.
//
// # Safety
// `cfg` must be a live handle from `gss4d_config_*`.
enum Gss4dStatus gss4d_config_set_seed(struct gss4d_config *cfg, uint64_t seed);

// Applies the quick profile (smaller symbol counts, coarser stepping).
//
// # Safety
// `cfg` must be a live handle from `gss4d_config_*`.
enum Gss4dStatus gss4d_config_apply_quick(struct gss4d_config *cfg);

// Frees a configuration handle. Null is a no-op.
//
// # Safety
// `cfg` must be null or a live handle; it is dead afterwards.
void gss4d_config_free(struct gss4d_config *cfg);

// Creates the PM-16QAM baseline. Never fails.
struct gss4d_constellation *gss4d_constellation_pm16qam(void);

// Creates probabilistically shaped PM-16QAM with outer-ring probability
// `p3` into `*out`.
//
// # Safety
// `out` must be a valid pointer.
enum Gss4dStatus gss4d_constellation_ps_pm16qam(double p3, struct gss4d_constellation **out);

// Builds an energy-normalized GSS constellation for modulation order
// 2^`m` with `k` shells from `n_params` free parameters (first the `k`
// shell radii ascending, then triples of hyperspherical angles) into
// `*out`.
//
// # Safety
// `params` must point to `n_params` doubles; `out` must be valid.
enum Gss4dStatus gss4d_constellation_build_gss(uint32_t m,
                                               uint32_t k,
                                               const double *params,
                                               size_t n_params,
                                               struct gss4d_constellation **out);

// Loads a constellation from the text format into `*out`.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be valid.
enum Gss4dStatus gss4d_constellation_load(const char *path, struct gss4d_constellation **out);

// Writes a constellation to the text format at `path`.
//
// # Safety
// `c` must be a live handle; `path` a NUL-terminated string.
enum Gss4dStatus gss4d_constellation_save(const struct gss4d_constellation *c, const char *path);

// Number of points.
//
// # Safety
// `c` must be a live handle. Returns 0 on null.
size_t gss4d_constellation_size(const struct gss4d_constellation *c);

// Prior-weighted mean symbol energy.
//
// # Safety
// `c` must be a live handle. Returns NaN on null.
double gss4d_constellation_mean_energy(const struct gss4d_constellation *c);

// Source entropy in bits per 4D symbol.
//
// # Safety
// `c` must be a live handle. Returns NaN on null.
double gss4d_constellation_entropy_bits(const struct gss4d_constellation *c);

// Symbol-domain peak-to-average power ratio (linear).
//
// # Safety
// `c` must be a live handle. Returns NaN on null.
double gss4d_constellation_papr(const struct gss4d_constellation *c);

// Copies the point coordinates into `buf` as point-major quadruples
// (x1, x2, x3, x4), requiring `cap >= 4 * size`.
//
// # Safety
// `c` must be a live handle; `buf` must point to `cap` writable doubles.
enum Gss4dStatus gss4d_constellation_points(const struct gss4d_constellation *c,
                                            double *buf,
                                            size_t cap);

// Frees a constellation handle. Null is a no-op.
//
// # Safety
// `c` must be null or a live handle; it is dead afterwards.
void gss4d_constellation_free(struct gss4d_constellation *c);

// Runs the full link evaluation (shaping, fiber, noise loading, receiver,
// mutual information) for `c` under `cfg` at one operating point.
// `use_final_symbols` selects the reporting symbol count and replicate;
// zero selects the optimizer profile (common random numbers).
//
// # Safety
// `cfg` and `c` must be live handles; `out` must be valid.
enum Gss4dStatus gss4d_evaluate_link(const struct gss4d_config *cfg,
                                     const struct gss4d_constellation *c,
                                     double distance_km,
                                     double power_dbm,
                                     int32_t use_final_symbols,
                                     struct Gss4dLinkResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GSS4D_H */
