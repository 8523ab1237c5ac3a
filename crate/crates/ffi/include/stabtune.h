/* C interface of the stabtune toolkit: stability measures, sparse logistic models, and stability selection. */

#ifndef STABTUNE_H
#define STABTUNE_H

/* Generated by cbindgen from the stabtune-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a fallible call. Anything but `Ok` leaves a message readable
 * via `st_last_error`.
 */
typedef enum StStatus {
  /**
   * The call succeeded.
   */
  ST_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  ST_STATUS_NULL_POINTER = 1,
  /**
   * An argument violated a documented precondition.
   */
  ST_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The computation itself failed.
   */
  ST_STATUS_RUNTIME_ERROR = 3,
} StStatus;

/**
 * A loaded dataset (feature matrix plus 0/1 labels).
 */
typedef struct StDataset StDataset;

/**
 * A fitted sparse logistic model.
 */
typedef struct StModel StModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buffer` (NUL
 * terminated, truncated to `length` bytes) and return the size the full
 * message needs, including the terminator. `buffer` may be NULL to query
 * the size only. An empty message (size 1) means no error is recorded.
 */
size_t st_last_error(char *buffer, size_t length);

/**
 * Library version as a static NUL-terminated string.
 */
const char *st_version(void);

/**
 * Build a dataset from a row-major `n x p` matrix and `n` labels in
 * {0, 1}. Returns NULL on invalid input.
 */
struct StDataset *st_dataset_new(const double *x, size_t n, size_t p, const uint8_t *y);

/**
 * Load a dataset from a CSV file with a header row; `label` names the
 * 0/1 class column. Returns NULL on failure.
 */
struct StDataset *st_dataset_from_csv(const char *path, const char *label);

/**
 * Simulate a block-correlated dataset (see the core crate's scenario
 * documentation). Returns NULL on invalid parameters.
 */
struct StDataset *st_simulate(size_t n,
                              size_t p,
                              size_t block_size,
                              double within_corr,
                              double between_corr,
                              size_t n_generating,
                              uint64_t seed);

void st_dataset_free(struct StDataset *dataset);

/**
 * Number of observations; 0 if the handle is NULL.
 */
size_t st_dataset_n(const struct StDataset *dataset);

/**
 * Number of features; 0 if the handle is NULL.
 */
size_t st_dataset_p(const struct StDataset *dataset);

/**
 * Unadjusted selection stability of a family of feature sets over `p`
 * features. `indices` concatenates all sets; `set_sizes[i]` is the length
 * of set `i`.
 */
enum StStatus st_smu(const size_t *indices,
                     const size_t *set_sizes,
                     size_t n_sets,
                     size_t p,
                     double *out_score);

/**
 * Adjusted selection stability with exact block similarity: features in
 * the same block of `block_size` consecutive indices count as
 * exchangeable. `theta` is the similarity threshold, `mc_samples` the
 * Monte-Carlo budget for the expectation (use 10000 when unsure).
 */
enum StStatus st_sma_block(const size_t *indices,
                           const size_t *set_sizes,
                           size_t n_sets,
                           size_t p,
                           size_t block_size,
                           double theta,
                           uint32_t mc_samples,
                           uint64_t seed,
                           double *out_score);

/**
 * Adjusted selection stability with a dense symmetric `p x p` similarity
 * matrix (row-major, values in [0, 1], unit diagonal).
 */
enum StStatus st_sma_dense(const size_t *indices,
                           const size_t *set_sizes,
                           size_t n_sets,
                           size_t p,
                           const double *similarity,
                           double theta,
                           uint32_t mc_samples,
                           uint64_t seed,
                           double *out_score);

/**
 * Fit a logistic model with at most `k` features chosen by greedy best
 * subset search. Returns NULL on failure.
 */
struct StModel *st_fit_l0(const struct StDataset *dataset, size_t k);

/**
 * Fit a logistic model on a fixed feature set. Returns NULL on failure.
 */
struct StModel *st_fit_logistic(const struct StDataset *dataset,
                                const size_t *features,
                                size_t n_features);

void st_model_free(struct StModel *model);

/**
 * Number of selected features; 0 if the handle is NULL.
 */
size_t st_model_support_size(const struct StModel *model);

/**
 * Copy the selected feature indices (ascending) into `buffer` and return
 * the number of features. At most `length` values are written; call with
 * a NULL buffer to query the size.
 */
size_t st_model_support(const struct StModel *model, size_t *buffer, size_t length);

/**
 * Copy the coefficients (aligned with the support indices) into `buffer`
 * and return the number of coefficients, analogous to
 * [`st_model_support`].
 */
size_t st_model_coefficients(const struct StModel *model, double *buffer, size_t length);

/**
 * Model intercept; NaN if the handle is NULL.
 */
double st_model_intercept(const struct StModel *model);

/**
 * Mean logistic training loss; NaN if the handle is NULL.
 */
double st_model_train_loss(const struct StModel *model);

/**
 * Whether the fit converged to gradient tolerance with bounded
 * standardized coefficients; false if the handle is NULL.
 */
bool st_model_converged(const struct StModel *model);

/**
 * Classification accuracy of `model` on `dataset`, written to
 * `out_accuracy`.
 */
enum StStatus st_accuracy(const struct StModel *model,
                          const struct StDataset *dataset,
                          double *out_accuracy);

/**
 * Stability-selection frequencies on complementary subsample pairs.
 * Writes one frequency per feature into `out_frequencies` (capacity p)
 * and the per-subsample support size into `out_q`.
 *
 * `cutoff` in (0.5, 1] and `pfer` > 0 bound the per-family error rate;
 * `n_subsamples` must be even and at least 2.
 */
enum StStatus st_stabsel_frequencies(const struct StDataset *dataset,
                                     double cutoff,
                                     double pfer,
                                     size_t n_subsamples,
                                     uint64_t seed,
                                     double *out_frequencies,
                                     size_t *out_q);

/**
 * Pick one configuration from parallel arrays of cross-validated
 * accuracy and stability scores: keep those within `acc_tolerance` of the
 * best accuracy, then within `stab_tolerance` of the best remaining
 * stability, then prefer accuracy, stability and finally a seeded random
 * tie-break. Writes the chosen array index to `out_index`.
 */
enum StStatus st_select_config(const double *accuracies,
                               const double *stabilities,
                               size_t n_configs,
                               double acc_tolerance,
                               double stab_tolerance,
                               uint64_t seed,
                               size_t *out_index);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STABTUNE_H */
