#ifndef GAZEATTN_H
#define GAZEATTN_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GaStatus {
  GA_STATUS_OK = 0,
  GA_STATUS_NULL_POINTER = 1,
  GA_STATUS_INVALID_ARGUMENT = 2,
  GA_STATUS_INVALID_UTF8 = 3,
  GA_STATUS_IO = 4,
  GA_STATUS_PARSE = 5,
  GA_STATUS_LENGTH_MISMATCH = 6,
  GA_STATUS_INFINITE_DIVERGENCE = 7,
  GA_STATUS_CONSTANT_INPUT = 8,
  GA_STATUS_TOO_FEW_SAMPLES = 9,
  GA_STATUS_PANIC = 10,
} GaStatus;

/**
 * Normalized attention distribution over the words of one document.
 */
typedef struct GaDistribution GaDistribution;

/**
 * Parsed stimulus document with its word layout.
 */
typedef struct GaDocument GaDocument;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library.
 */
const char *ga_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ga_version(void);

/**
 * Normalizes `len` non-negative masses into a new distribution.
 *
 * # Safety
 * `doc_id` must be a NUL-terminated string, `masses` must point to `len`
 * values and `out_dist` must be writable.
 */
enum GaStatus ga_distribution_new(const char *doc_id,
                                  const double *masses,
                                  size_t len,
                                  struct GaDistribution **out_dist);

/**
 * # Safety
 * `dist` must come from [`ga_distribution_new`] and not be freed twice.
 */
void ga_distribution_free(struct GaDistribution *dist);

/**
 * Number of words, or 0 for a null handle.
 *
 * # Safety
 * `dist` must be null or a live handle.
 */
size_t ga_distribution_len(const struct GaDistribution *dist);

/**
 * Copies the normalized weights into `buf`, which must hold at least
 * [`ga_distribution_len`] values.
 *
 * # Safety
 * `dist` must be a live handle and `buf` writable for `cap` values.
 */
enum GaStatus ga_distribution_weights(const struct GaDistribution *dist, double *buf, size_t cap);

/**
 * Shannon entropy in nats.
 *
 * # Safety
 * `dist` must be a live handle and `out_nats` writable.
 */
enum GaStatus ga_entropy(const struct GaDistribution *dist, double *out_nats);

/**
 * Smoothed `D(human || model)` in nats.
 *
 * # Safety
 * Both handles must be live and `out_kl` writable.
 */
enum GaStatus ga_kl_divergence(const struct GaDistribution *human,
                               const struct GaDistribution *model,
                               double epsilon,
                               double *out_kl);

/**
 * Spearman rank correlation with its two-sided p-value.
 *
 * # Safety
 * `x` and `y` must each point to `n` values; the outputs must be writable.
 */
enum GaStatus ga_spearman(const double *x,
                          const double *y,
                          size_t n,
                          double *out_rho,
                          double *out_p);

/**
 * CDF of the studentized range with `k` groups and `df` degrees of freedom.
 *
 * # Safety
 * `out_p` must be writable.
 */
enum GaStatus ga_ptukey(double q, size_t k, double df, double *out_p);

/**
 * Loads a stimulus TSV. The document id is the file stem.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out_doc` writable.
 */
enum GaStatus ga_document_load(const char *path, struct GaDocument **out_doc);

/**
 * # Safety
 * `doc` must come from [`ga_document_load`] and not be freed twice.
 */
void ga_document_free(struct GaDocument *doc);

/**
 * Number of words, or 0 for a null handle.
 *
 * # Safety
 * `doc` must be null or a live handle.
 */
size_t ga_document_len(const struct GaDocument *doc);

/**
 * Word under the point `(x, y)`, snapping to the nearest box within
 * `snap_px` when positive. Writes -1 when no word is hit.
 *
 * # Safety
 * `doc` must be a live handle and `out_token` writable.
 */
enum GaStatus ga_hit_test(const struct GaDocument *doc,
                          double x,
                          double y,
                          double snap_px,
                          int64_t *out_token);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAZEATTN_H */
