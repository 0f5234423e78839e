#ifndef FLAGCS_H
#define FLAGCS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FlagcsStatus {
  FLAGCS_STATUS_OK = 0,
  FLAGCS_STATUS_NULL_POINTER = 1,
  FLAGCS_STATUS_INVALID_UTF8 = 2,
  FLAGCS_STATUS_CONFIG = 3,
  FLAGCS_STATUS_DIMENSION = 4,
  FLAGCS_STATUS_INVALID_ARGUMENT = 5,
  FLAGCS_STATUS_NUMERICAL = 6,
  FLAGCS_STATUS_LABEL = 7,
  FLAGCS_STATUS_STRUCTURE = 8,
  FLAGCS_STATUS_IO = 9,
  FLAGCS_STATUS_BUFFER_TOO_SMALL = 10,
  FLAGCS_STATUS_PANIC = 11,
} FlagcsStatus;

/**
 * The result of a full analysis run.
 */
typedef struct FlagcsReport FlagcsReport;

/**
 * A validated bilinear system.
 */
typedef struct FlagcsSystem FlagcsSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *flagcs_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void flagcs_string_free(char *s);

/**
 * Builds a system from JSON `{"n", "A", "B", "range": {"lo", "hi"}}`.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` a valid pointer.
 */
enum FlagcsStatus flagcs_system_from_json(const char *json, struct FlagcsSystem **out);

/**
 * # Safety
 * `sys` must be null or a handle from [`flagcs_system_from_json`], not yet freed.
 */
void flagcs_system_free(struct FlagcsSystem *sys);

/**
 * # Safety
 * `sys` must be a live handle; `n` and `m` valid pointers.
 */
enum FlagcsStatus flagcs_system_shape(const struct FlagcsSystem *sys, size_t *n, size_t *m);

/**
 * Flows the flag spanned by the leading columns of `frame_in` (`n × n`,
 * row-major) with subspace dimensions `dims` along a piecewise-constant
 * control: piece `k` uses `controls[k*m .. (k+1)*m]` for `durations[k]`.
 * Writes the resulting orthonormal frame to `frame_out` (`n × n`).
 *
 * # Safety
 * All pointers must be valid for the stated lengths.
 */
enum FlagcsStatus flagcs_flow(const struct FlagcsSystem *sys,
                              const double *frame_in,
                              const size_t *dims,
                              size_t dims_len,
                              const double *controls,
                              const double *durations,
                              size_t pieces,
                              double *frame_out);

/**
 * Runs the full pipeline on a JSON run configuration. A report whose
 * checks failed is still returned with [`FlagcsStatus::Ok`]; query
 * [`flagcs_report_passed`].
 *
 * # Safety
 * `config_json` must be a nul-terminated string and `out` a valid pointer.
 */
enum FlagcsStatus flagcs_analyze_json(const char *config_json, struct FlagcsReport **out);

/**
 * # Safety
 * `report` must be null or a handle from [`flagcs_analyze_json`], not yet freed.
 */
void flagcs_report_free(struct FlagcsReport *report);

/**
 * The report as JSON; free with [`flagcs_string_free`].
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum FlagcsStatus flagcs_report_json(const struct FlagcsReport *report, char **out);

/**
 * Numbers of labeled control sets and chain control sets.
 *
 * # Safety
 * `report` must be a live handle; the outputs valid pointers.
 */
enum FlagcsStatus flagcs_report_counts(const struct FlagcsReport *report,
                                       size_t *control_sets,
                                       size_t *chain_sets);

/**
 * Writes 1 if no check failed, 0 otherwise.
 *
 * # Safety
 * `report` must be a live handle and `passed` a valid pointer.
 */
enum FlagcsStatus flagcs_report_passed(const struct FlagcsReport *report, int32_t *passed);

/**
 * `|W_L \ W / W_R|` for `W = S_n`; `left` and `right` list simple-root
 * indices in `1..n-1`.
 *
 * # Safety
 * `left` and `right` must be valid for their lengths; `out` a valid pointer.
 */
enum FlagcsStatus flagcs_double_coset_count(size_t n,
                                            const size_t *left,
                                            size_t left_len,
                                            const size_t *right,
                                            size_t right_len,
                                            size_t *out);

/**
 * Reduced word of the permutation `perm` (one-line, 1-based). Writes up to
 * `capacity` letters to `word` and the full length to `len`; fails with
 * [`FlagcsStatus::BufferTooSmall`] if the word does not fit.
 *
 * # Safety
 * `perm` must be valid for `n` entries, `word` for `capacity`, `len` valid.
 */
enum FlagcsStatus flagcs_reduced_word(const size_t *perm,
                                      size_t n,
                                      size_t *word,
                                      size_t capacity,
                                      size_t *len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLAGCS_H */
