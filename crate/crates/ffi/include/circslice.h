#ifndef CIRCSLICE_H
#define CIRCSLICE_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum {
  CS_STATUS_OK = 0,
  CS_STATUS_NULL_POINTER = 1,
  CS_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed body-spec JSON or an unknown command/format name.
   */
  CS_STATUS_PARSE = 3,
  /**
   * The body failed positivity, boundedness or symmetry checks.
   */
  CS_STATUS_VALIDATION = 4,
  /**
   * A bad argument: direction, quadrature settings, layout mismatch.
   */
  CS_STATUS_INVALID_ARGUMENT = 5,
  /**
   * The computation itself failed (non-finite values, oracle failure).
   */
  CS_STATUS_COMPUTATION = 6,
  /**
   * The operation is not defined for this input.
   */
  CS_STATUS_UNSUPPORTED = 7,
  /**
   * A Rust panic was caught at the boundary.
   */
  CS_STATUS_PANIC = 8,
} CsStatus;

/**
 * Opaque body handle.
 */
typedef struct CsBody CsBody;

/**
 * Quadrature settings. Start from [`cs_quadrature_default`].
 */
typedef struct {
  size_t sphere_samples;
  size_t circle_nodes;
  size_t phase_samples;
  uint64_t seed;
  size_t chunk_size;
} CsQuadrature;

typedef struct {
  double value;
  double std_error;
  size_t samples;
} CsEstimate;

typedef struct {
  CsEstimate volume;
  CsEstimate functional;
  CsEstimate defect;
  double significance;
  double max_relative_gap;
  double min_relative_gap;
  /**
   * `|defect| <= 3 std_error`.
   */
  bool circular;
} CsDefect;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *cs_last_error_message(void);

/**
 * Default quadrature counts with the given seed.
 */
CsQuadrature cs_quadrature_default(uint64_t seed);

/**
 * Parses and validates a body-spec JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
CsStatus cs_body_from_json(const char *json, CsBody **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `body` must come from this library and not be freed twice.
 */
void cs_body_free(CsBody *body);

/**
 * Serializes the body back to spec JSON (caller frees with [`cs_string_free`]).
 *
 * # Safety
 * `body` must be a live handle and `out` writable.
 */
CsStatus cs_body_to_json(const CsBody *body, char **out);

/**
 * Block count `n` and block dimension `d` (2 or 4).
 *
 * # Safety
 * `body` must be a live handle; outputs must be writable.
 */
CsStatus cs_body_shape(const CsBody *body, size_t *n, size_t *d);

/**
 * Whether the body is circular by construction.
 *
 * # Safety
 * `body` must be a live handle and `out` writable.
 */
CsStatus cs_body_known_circular(const CsBody *body, bool *out);

/**
 * Radial function at `coords` (length `d * n`, normalized internally).
 *
 * # Safety
 * `coords` must point at `len` doubles; `out` must be writable.
 */
CsStatus cs_radial(const CsBody *body, const double *coords, size_t len, double *out);

/**
 * Volume by polar-coordinate Monte Carlo.
 *
 * # Safety
 * Pointers must be valid.
 */
CsStatus cs_volume_polar(const CsBody *body, const CsQuadrature *quadrature, CsEstimate *out);

/**
 * Exact volume where one is known; `*known` is false otherwise.
 *
 * # Safety
 * Pointers must be valid.
 */
CsStatus cs_closed_form_volume(const CsBody *body, double *out, bool *known);

/**
 * Measure of the body's section by the line through `coords`.
 *
 * # Safety
 * `coords` must point at `len` doubles; other pointers must be valid.
 */
CsStatus cs_slice_measure(const CsBody *body,
                          const double *coords,
                          size_t len,
                          const CsQuadrature *quadrature,
                          double *out);

/**
 * `c_{n,d} E[slice^n]` over random lines.
 *
 * # Safety
 * Pointers must be valid.
 */
CsStatus cs_theorem1_functional(const CsBody *body,
                                const CsQuadrature *quadrature,
                                CsEstimate *out);

/**
 * Volume minus the slice functional, from shared samples.
 *
 * # Safety
 * Pointers must be valid.
 */
CsStatus cs_circularity_defect(const CsBody *body, const CsQuadrature *quadrature, CsDefect *out);

/**
 * New handle for the phase-averaged body, using the quadrature's phase rule.
 *
 * # Safety
 * Pointers must be valid.
 */
CsStatus cs_circularize(const CsBody *body, const CsQuadrature *quadrature, CsBody **out);

/**
 * Runs a report command (`volume`, `slice`, `functional`, `defect`,
 * `circularity`, `compare`, `demo-necessity`, `selfcheck`) over `count`
 * handles and returns the report text in `format` (`table`, `csv`, `json`).
 * `*passed` is false when a self-check fails.
 *
 * # Safety
 * `bodies` must point at `count` live handles (may be NULL when `count` is 0);
 * strings must be NUL-terminated; outputs writable.
 */
CsStatus cs_run_report(const char *command,
                       const CsBody *const *bodies,
                       size_t count,
                       const CsQuadrature *quadrature,
                       double tol,
                       const char *format,
                       char **out,
                       bool *passed);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void cs_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CIRCSLICE_H */
