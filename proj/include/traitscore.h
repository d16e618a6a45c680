/* traitscore — multi-trait assessment scoring pipeline, C API.
 *
 * Conventions:
 *   - every function returns a ts_status code; TS_OK is 0
 *   - ts_last_error() describes the most recent failure on this thread
 *   - out-strings are heap-allocated; release them with ts_string_free()
 *   - handles are opaque; release them with their *_free() function
 */
#ifndef TRAITSCORE_H
#define TRAITSCORE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TS_API __declspec(dllexport)
#else
#define TS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ts_status {
  TS_OK = 0,
  TS_ERR_INVALID_ARG = 1,
  TS_ERR_IO = 2,
  TS_ERR_CONFIG = 3,
  TS_ERR_BACKEND = 4,
  TS_ERR_INTERNAL = 5,
  /* Run finished but some items failed; outputs were still written. */
  TS_PARTIAL = 6
} ts_status;

typedef struct ts_dataset ts_dataset;
typedef struct ts_run ts_run;

TS_API const char* ts_version(void);
TS_API const char* ts_last_error(void);
TS_API void ts_string_free(char* text);

/* ---- datasets ---- */

/* Opens a dataset through its manifest (formats: jsonl, asap_tsv, fixture).
 * Skipped-row warnings are reported through out_warnings_json when given. */
TS_API ts_status ts_dataset_open(const char* manifest_path, ts_dataset** out);
TS_API ts_status ts_dataset_fixture(int question, uint64_t seed, size_t items,
                                    ts_dataset** out);
TS_API void ts_dataset_free(ts_dataset* dataset);

TS_API ts_status ts_dataset_info(const ts_dataset* dataset, char** out_json);
TS_API ts_status ts_dataset_validate(const ts_dataset* dataset,
                                     char** out_json);
TS_API ts_status ts_dataset_stats(const ts_dataset* dataset,
                                  const char* criterion_id, char** out_json);
TS_API ts_status ts_dataset_stats_csv(const ts_dataset* dataset,
                                      char** out_csv);
/* Writes <dir>/manifest.json + <dir>/items.jsonl (canonical schema). */
TS_API ts_status ts_dataset_save(const ts_dataset* dataset, const char* dir);
TS_API ts_status ts_dataset_split(const ts_dataset* dataset,
                                  double train_fraction, uint64_t seed,
                                  ts_dataset** out_train,
                                  ts_dataset** out_test);

/* ---- metrics ---- */

/* Quadratic weighted kappa over categories scale_min..scale_max.
 * out_degenerate is set to 1 when expected disagreement was zero. */
TS_API ts_status ts_qwk(const int* truth, const int* pred, size_t n,
                        int scale_min, int scale_max, double* out_qwk,
                        int* out_degenerate);
TS_API ts_status ts_mse(const int* truth, const int* pred, size_t n,
                        int scale_min, int scale_max, double* out_mse);

/* ---- pipeline stages ---- */

/* config_json follows the run-config schema documented in the README. */
TS_API ts_status ts_embed_dataset(const ts_dataset* dataset,
                                  const char* embeddings_json,
                                  char** out_summary_json);
TS_API ts_status ts_exemplar_banks(const ts_dataset* dataset,
                                   double train_fraction, uint64_t seed,
                                   int use_cleaned_text, char** out_json);
TS_API ts_status ts_cluster_sentences(const ts_dataset* dataset,
                                      const char* embeddings_json, size_t k,
                                      uint64_t seed, size_t max_iters,
                                      char** out_csv, char** out_summary_json);

/* ---- experiments ---- */

/* Runs the configured experiment, persists the run directory, returns a
 * handle. TS_PARTIAL signals per-item failures (outputs still written). */
TS_API ts_status ts_run_experiment(const char* config_json, ts_run** out);
TS_API void ts_run_free(ts_run* run);
TS_API ts_status ts_run_summary_json(const ts_run* run, char** out_json);
TS_API ts_status ts_run_report_json(const ts_run* run, char** out_json);
TS_API ts_status ts_run_dir(const ts_run* run, char** out_path);

/* ablations_csv: comma-separated subset of "no_examples,reduced_rubric". */
TS_API ts_status ts_run_ablation(const char* config_json,
                                 const char* ablations_csv,
                                 char** out_table_csv,
                                 char** out_table_markdown);

/* Recomputes the report of a persisted run directory. */
TS_API ts_status ts_evaluate_run(const char* run_dir, char** out_report_json);
/* Re-emits report.csv / report.md / error_histogram.csv from report.json. */
TS_API ts_status ts_emit_report(const char* run_dir, char** out_files_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TRAITSCORE_H */
