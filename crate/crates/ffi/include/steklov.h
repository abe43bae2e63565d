#ifndef STEKLOV_H
#define STEKLOV_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum {
  STK_STATUS_OK = 0,
  STK_STATUS_NULL_POINTER = 1,
  STK_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The operation has no domain, e.g. a window at least as long as `I`.
   */
  STK_STATUS_DOMAIN = 3,
  STK_STATUS_IO = 4,
  /**
   * A field file could not be parsed.
   */
  STK_STATUS_FORMAT = 5,
  STK_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * A bug inside the library; the handle arguments are left untouched.
   */
  STK_STATUS_PANIC = 7,
} StkStatus;

/**
 * A sampled space-time field with its grids.
 */
typedef struct StkField StkField;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a field from raw grids and values.
 *
 * `shape`, `spacing` and `origin` hold `ndim` entries (`ndim` may be 0 for
 * a single spatial point of unit measure). `values` holds `values_len` samples in
 * space-major order: the time series of each spatial point is contiguous,
 * spatial points in row-major order.
 *
 * # Safety
 * Array pointers must be valid for the stated lengths; `out` must be
 * writable.
 */
StkStatus stk_field_new(size_t ndim,
                        const size_t *shape,
                        const double *spacing,
                        const double *origin,
                        double t0,
                        double dt,
                        size_t n_time,
                        const double *values,
                        size_t values_len,
                        StkField **out);

/**
 * Reads a field file (JSON manifest plus binary payload).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
StkStatus stk_field_read(const char *path, StkField **out);

/**
 * Writes a field file; the payload lands next to the manifest.
 *
 * # Safety
 * `field` must come from this library; `path` must be a NUL-terminated
 * string.
 */
StkStatus stk_field_write(const StkField *field, const char *path);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `field` must be null or a handle from this library not yet freed.
 */
void stk_field_free(StkField *field);

/**
 * Number of stored samples, or 0 for null.
 *
 * # Safety
 * `field` must be null or a live handle.
 */
size_t stk_field_len(const StkField *field);

/**
 * Number of spatial points, or 0 for null.
 *
 * # Safety
 * `field` must be null or a live handle.
 */
size_t stk_field_n_space(const StkField *field);

/**
 * Number of time points, or 0 for null.
 *
 * # Safety
 * `field` must be null or a live handle.
 */
size_t stk_field_n_time(const StkField *field);

/**
 * Start and step of the field's time grid.
 *
 * # Safety
 * `field` must be a live handle; `t0` and `dt` must be writable.
 */
StkStatus stk_field_time_grid(const StkField *field, double *t0, double *dt);

/**
 * Copies all samples into `buf`, which must hold `stk_field_len` values.
 *
 * # Safety
 * `field` must be a live handle; `buf` must be writable for `len` values.
 */
StkStatus stk_field_copy_values(const StkField *field, double *buf, size_t len);

/**
 * Steklov average with window `h`, a positive multiple of the time step.
 * With `extended` the result covers the whole time grid (zero extension
 * past the end); otherwise only the times `t` with `t + h` in the grid.
 *
 * # Safety
 * `field` must be a live handle; `out` must be writable.
 */
StkStatus stk_steklov_average(const StkField *field, double h, bool extended, StkField **out);

/**
 * `(v(t + h) - v(t)) / h` on the times where it is defined.
 *
 * # Safety
 * `field` must be a live handle; `out` must be writable.
 */
StkStatus stk_time_derivative(const StkField *field, double h, StkField **out);

/**
 * Norm of the field in `L^r(I, L^q(E))`; pass `INFINITY` for a supremum.
 *
 * # Safety
 * `field` must be a live handle; `out` must be writable.
 */
StkStatus stk_bochner_norm(const StkField *field, double q, double r, double *out);

/**
 * Copies the calling thread's last error message into `buf` (always
 * NUL-terminated when `len > 0`) and returns the length the full message
 * needs, terminator included.
 *
 * # Safety
 * `buf` must be null or writable for `len` bytes.
 */
size_t stk_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *stk_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STEKLOV_H */
