#ifndef CLARIFY_RANK_H
#define CLARIFY_RANK_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CrStatus {
  CR_STATUS_OK = 0,
  CR_STATUS_NULL_POINTER = 1,
  CR_STATUS_INVALID_ARGUMENT = 2,
  CR_STATUS_IO = 3,
  CR_STATUS_FORMAT = 4,
  CR_STATUS_SHAPE = 5,
  CR_STATUS_PANIC = 6,
} CrStatus;

/**
 * Loaded EMB1 table.
 */
typedef struct CrEmbeddings CrEmbeddings;

/**
 * Loaded model file.
 */
typedef struct CrModel CrModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *cr_last_error_message(void);

/**
 * Static, NUL-terminated library version.
 */
const char *cr_version(void);

/**
 * NDCG of relevance labels listed in ranked order.
 *
 * # Safety
 * `relevance` must point to `len` readable bytes (or be null with `len` 0);
 * `out` must be a valid pointer.
 */
enum CrStatus cr_ndcg(const uint8_t *relevance, size_t len, double *out);

/**
 * Reciprocal rank of the first relevant label.
 *
 * # Safety
 * As [`cr_ndcg`].
 */
enum CrStatus cr_mrr(const uint8_t *relevance, size_t len, double *out);

/**
 * Two-sided paired t-test of `a − b`.
 *
 * # Safety
 * `a` and `b` must each point to `n` readable doubles; `t_statistic` and
 * `p_value` must be valid pointers.
 */
enum CrStatus cr_paired_ttest(const double *a,
                              const double *b,
                              size_t n,
                              double *t_statistic,
                              double *p_value);

/**
 * RankNet lambdas `∂C/∂s_i` and the pairwise cost for one group.
 *
 * # Safety
 * `scores`, `relevance` and `lambdas` must each cover `n` elements; `cost`
 * may be null.
 */
enum CrStatus cr_lambda_gradients(const double *scores,
                                  const uint8_t *relevance,
                                  size_t n,
                                  double sigma,
                                  double *lambdas,
                                  double *cost);

/**
 * Loads an MDL1 file into a new handle.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` a valid pointer.
 */
enum CrStatus cr_model_load(const char *path, struct CrModel **out);

/**
 * Releases a model handle; null is ignored.
 *
 * # Safety
 * `model` must come from [`cr_model_load`] and not be used afterwards.
 */
void cr_model_free(struct CrModel *model);

/**
 * Network input width, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t cr_model_input_dim(const struct CrModel *model);

/**
 * Network output width, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t cr_model_output_dim(const struct CrModel *model);

/**
 * Eval-mode outputs for a row-major `rows × cols` batch; `out` receives
 * `rows × output_dim` values.
 *
 * # Safety
 * `model` must be a live handle; `x` must cover `rows × cols` doubles and
 * `out` `out_len` doubles.
 */
enum CrStatus cr_model_predict(const struct CrModel *model,
                               const double *x,
                               size_t rows,
                               size_t cols,
                               double *out,
                               size_t out_len);

/**
 * Predicts from raw pane text with the model's stored TFIDF vocabulary.
 *
 * # Safety
 * `model` must be a live handle; `query` and `question` NUL-terminated
 * strings; `answers` an array of `n_answers` such strings (or null when
 * `n_answers` is 0); `out` must cover `out_len` doubles.
 */
enum CrStatus cr_model_predict_text(const struct CrModel *model,
                                    const char *query,
                                    const char *question,
                                    const char *const *answers,
                                    size_t n_answers,
                                    double *out,
                                    size_t out_len);

/**
 * Loads an EMB1 file (width 5376) into a new handle.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` a valid pointer.
 */
enum CrStatus cr_embeddings_load(const char *path, struct CrEmbeddings **out);

/**
 * Releases an embedding handle; null is ignored.
 *
 * # Safety
 * `emb` must come from [`cr_embeddings_load`] and not be used afterwards.
 */
void cr_embeddings_free(struct CrEmbeddings *emb);

/**
 * Row count, or 0 for a null handle.
 *
 * # Safety
 * `emb` must be null or a live handle.
 */
size_t cr_embeddings_rows(const struct CrEmbeddings *emb);

/**
 * Row width, or 0 for a null handle.
 *
 * # Safety
 * `emb` must be null or a live handle.
 */
size_t cr_embeddings_dim(const struct CrEmbeddings *emb);

/**
 * Copies one row into `out`, which must hold exactly `dim` floats.
 *
 * # Safety
 * `emb` must be a live handle and `out` must cover `out_len` floats.
 */
enum CrStatus cr_embeddings_row(const struct CrEmbeddings *emb,
                                size_t row,
                                float *out,
                                size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CLARIFY_RANK_H */
