/* SPDX-License-Identifier: Apache-2.0 */

#ifndef ATISSUE_H
#define ATISSUE_H

/* Generated by cbindgen at build time. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum AtissueStatus {
  ATISSUE_STATUS_OK = 0,
  ATISSUE_STATUS_NULL_ARGUMENT = 1,
  ATISSUE_STATUS_INVALID_UTF8 = 2,
  /**
   * Bad configuration or arguments.
   */
  ATISSUE_STATUS_USAGE = 3,
  /**
   * Malformed or inconsistent data.
   */
  ATISSUE_STATUS_DATA = 4,
  /**
   * The scoring backend failed or lacks a capability.
   */
  ATISSUE_STATUS_BACKEND = 5,
  /**
   * An internal panic was caught at the boundary.
   */
  ATISSUE_STATUS_PANIC = 6,
} AtissueStatus;

/**
 * An opened scoring backend together with the lexicon it scores against.
 */
typedef struct AtissueScorer AtissueScorer;

/**
 * A generated or loaded stimulus suite.
 */
typedef struct AtissueSuite AtissueSuite;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. The pointer
 * stays valid until the next library call on the same thread.
 */
const char *atissue_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *atissue_version(void);

/**
 * Schema version stamped into persisted records.
 */
uint32_t atissue_schema_version(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void atissue_string_free(char *s);

/**
 * Generates the default suite (shipped lexicon, both modes, narrative format).
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum AtissueStatus atissue_suite_generate(uint64_t seed,
                                          uint32_t n_per_pair,
                                          struct AtissueSuite **out);

/**
 * Loads a suite file (one JSON instance per line).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum AtissueStatus atissue_suite_load(const char *path, struct AtissueSuite **out);

/**
 * Number of instances in the suite; 0 for NULL.
 *
 * # Safety
 * `suite` must be NULL or a live handle.
 */
size_t atissue_suite_len(const struct AtissueSuite *suite);

/**
 * Serializes the suite as line-delimited JSON into a new string.
 *
 * # Safety
 * `suite` must be a live handle; `out` must be writable.
 */
enum AtissueStatus atissue_suite_to_jsonl(const struct AtissueSuite *suite, char **out);

/**
 * # Safety
 * `suite` must be NULL or a handle not freed before.
 */
void atissue_suite_free(struct AtissueSuite *suite);

/**
 * Opens a backend from a spec string such as `inproc:prefer-main`,
 * `mock:rules.toml`, `proto:<command>` or `replay:<scores.jsonl>`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be writable.
 */
enum AtissueStatus atissue_scorer_open(const char *spec, struct AtissueScorer **out);

/**
 * Model identifier of the backend as a new string.
 *
 * # Safety
 * `scorer` must be a live handle; `out` must be writable.
 */
enum AtissueStatus atissue_scorer_model_id(const struct AtissueScorer *scorer, char **out);

/**
 * # Safety
 * `scorer` must be NULL or a handle not freed before.
 */
void atissue_scorer_free(struct AtissueScorer *scorer);

/**
 * Runs an experiment (`header`, `rejection`, `conjunction`, `ellipsis_top1`,
 * `ellipsis_top2`) and returns the full result as a JSON string.
 *
 * # Safety
 * Handles must be live; `experiment` NUL-terminated; `out_json` writable.
 */
enum AtissueStatus atissue_run_experiment(const struct AtissueSuite *suite,
                                          const struct AtissueScorer *scorer,
                                          const char *experiment,
                                          char **out_json);

/**
 * Success proportion of one group (ties count half) for an experiment.
 *
 * # Safety
 * Handles must be live; strings NUL-terminated; `out` writable.
 */
enum AtissueStatus atissue_experiment_proportion(const struct AtissueSuite *suite,
                                                 const struct AtissueScorer *scorer,
                                                 const char *experiment,
                                                 const char *group,
                                                 double *out);

/**
 * Wilson score interval for `successes` out of `n` at confidence `level`.
 *
 * # Safety
 * `low` and `high` must be writable.
 */
enum AtissueStatus atissue_wilson_ci(double successes,
                                     uint64_t n,
                                     double level,
                                     double *low,
                                     double *high);

/**
 * One-sided Welch t-test of `mean(a) > mean(b)`.
 *
 * # Safety
 * `a` and `b` must point to `na` and `nb` readable doubles; outputs writable.
 */
enum AtissueStatus atissue_welch_t(const double *a,
                                   size_t na,
                                   const double *b,
                                   size_t nb,
                                   double *t,
                                   double *df,
                                   double *p);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ATISSUE_H */
