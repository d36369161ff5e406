#ifndef TUNEGAIN_H
#define TUNEGAIN_H

/* Generated from src/lib.rs by cbindgen; regenerate instead of editing. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a fallible call.
 */
typedef enum TgStatus {
  /**
   * The call succeeded.
   */
  TG_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  TG_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  TG_STATUS_INVALID_UTF8 = 2,
  /**
   * Reading or writing a file failed.
   */
  TG_STATUS_IO = 3,
  /**
   * The inputs were rejected (parse error, unknown name, bad value).
   */
  TG_STATUS_INVALID = 4,
  /**
   * An internal invariant failed; the library state is still sound.
   */
  TG_STATUS_PANIC = 5,
} TgStatus;

/**
 * A replayable coverage matrix plus its class index.
 */
typedef struct TgMatrix TgMatrix;

/**
 * An ordering of classes, best candidate first.
 */
typedef struct TgRanking TgRanking;

/**
 * The outcome of one tuning run.
 */
typedef struct TgResult TgResult;

/**
 * A hyper-parameter grid.
 */
typedef struct TgSpace TgSpace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *tg_version(void);

/**
 * Message of the last failure on this thread, empty until one occurs. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *tg_last_error(void);

/**
 * Builds the builtin hyper-parameter grid. Release with `tg_space_free`.
 */
struct TgSpace *tg_space_builtin(void);

/**
 * Loads a space from a JSON file into `*out`. Release with `tg_space_free`.
 *
 * # Safety
 * `path` must point to a NUL-terminated string and `out` to writable
 * storage for one pointer.
 */
enum TgStatus tg_space_load(const char *path, struct TgSpace **out);

/**
 * Number of configurations in the grid; 0 when `space` is null.
 *
 * # Safety
 * `space` must be null or a live pointer from a `tg_space_*` constructor.
 */
size_t tg_space_size(const struct TgSpace *space);

/**
 * Releases a space; null is a no-op.
 *
 * # Safety
 * `space` must be null or an unreleased pointer from a `tg_space_*`
 * constructor.
 */
void tg_space_free(struct TgSpace *space);

/**
 * Loads a coverage matrix CSV into `*out`, validated against `space` (null
 * means the builtin grid; the space is only read). Release with
 * `tg_matrix_free`.
 *
 * # Safety
 * `path` must point to a NUL-terminated string, `space` must be null or a
 * live space pointer, and `out` must point to writable storage for one
 * pointer.
 */
enum TgStatus tg_matrix_load(const char *path, const struct TgSpace *space, struct TgMatrix **out);

/**
 * Number of classes in the matrix; 0 when `matrix` is null.
 *
 * # Safety
 * `matrix` must be null or a live pointer from `tg_matrix_load`.
 */
size_t tg_matrix_n_classes(const struct TgMatrix *matrix);

/**
 * Copies the id of the `index`-th class (sorted order) NUL-terminated into
 * `buf` of `cap` bytes.
 *
 * # Safety
 * `matrix` must be a live pointer from `tg_matrix_load` and `buf` must hold
 * at least `cap` writable bytes.
 */
enum TgStatus tg_matrix_class_id(const struct TgMatrix *matrix,
                                 size_t index,
                                 char *buf,
                                 size_t cap);

/**
 * Releases a matrix; null is a no-op.
 *
 * # Safety
 * `matrix` must be null or an unreleased pointer from `tg_matrix_load`.
 */
void tg_matrix_free(struct TgMatrix *matrix);

/**
 * Computes one class's tuning gain. Each output pointer may be null to skip
 * that component.
 *
 * # Safety
 * `matrix` must be a live pointer from `tg_matrix_load`, `class_id` a
 * NUL-terminated string, and every non-null output pointer must be writable.
 */
enum TgStatus tg_gain(const struct TgMatrix *matrix,
                      const char *class_id,
                      double *variation,
                      double *sparsity,
                      double *gain);

/**
 * Ranks every class by its true tuning gain into `*out`. Release with
 * `tg_ranking_free`.
 *
 * # Safety
 * `matrix` must be a live pointer from `tg_matrix_load` and `out` must
 * point to writable storage for one pointer.
 */
enum TgStatus tg_rank_by_gain(const struct TgMatrix *matrix, struct TgRanking **out);

/**
 * Number of classes in the ranking; 0 when `ranking` is null.
 *
 * # Safety
 * `ranking` must be null or a live pointer from `tg_rank_by_gain`.
 */
size_t tg_ranking_len(const struct TgRanking *ranking);

/**
 * Copies the id of the class ranked at `index` (0 is the best candidate)
 * NUL-terminated into `buf` of `cap` bytes.
 *
 * # Safety
 * `ranking` must be a live pointer from `tg_rank_by_gain` and `buf` must
 * hold at least `cap` writable bytes.
 */
enum TgStatus tg_ranking_class(const struct TgRanking *ranking,
                               size_t index,
                               char *buf,
                               size_t cap);

/**
 * Releases a ranking; null is a no-op.
 *
 * # Safety
 * `ranking` must be null or an unreleased pointer from `tg_rank_by_gain`.
 */
void tg_ranking_free(struct TgRanking *ranking);

/**
 * Replays one tuning strategy over the matrix into `*out`. `label` is one
 * of: default glob_mg rnd_rs rnd_mg rnd_de pri_rs pri_mg pri_de. `cutoff`
 * in (0, 1] sizes prioritized and random subsets. `ranking` may be null for
 * strategies that do not need one. Release with `tg_result_free`.
 *
 * # Safety
 * `matrix` must be a live pointer from `tg_matrix_load`, `label` a
 * NUL-terminated string, `ranking` null or a live ranking pointer, and
 * `out` must point to writable storage for one pointer.
 */
enum TgStatus tg_run_strategy(const struct TgMatrix *matrix,
                              const char *label,
                              double cutoff,
                              uint64_t budget_hours,
                              uint64_t seed,
                              const struct TgRanking *ranking,
                              struct TgResult **out);

/**
 * Total extra branches covered versus the default configuration; 0 when
 * `result` is null.
 *
 * # Safety
 * `result` must be null or a live pointer from `tg_run_strategy`.
 */
double tg_result_total_extra(const struct TgResult *result);

/**
 * Evaluations charged against the budget; 0 when `result` is null.
 *
 * # Safety
 * `result` must be null or a live pointer from `tg_run_strategy`.
 */
uint64_t tg_result_total_evals(const struct TgResult *result);

/**
 * Writes the per-class outcome CSV to `path`.
 *
 * # Safety
 * `result` must be a live pointer from `tg_run_strategy` and `path` a
 * NUL-terminated string.
 */
enum TgStatus tg_result_save_csv(const struct TgResult *result, const char *path);

/**
 * Releases a result; null is a no-op.
 *
 * # Safety
 * `result` must be null or an unreleased pointer from `tg_run_strategy`.
 */
void tg_result_free(struct TgResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TUNEGAIN_H */
