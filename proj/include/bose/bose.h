/*
 * bose — base-model evaluation harness.
 *
 * C API of the shared library. All objects are opaque handles created and
 * destroyed through these functions; every fallible call returns a
 * bose_status and leaves a human-readable message in bose_last_error()
 * (thread-local). Strings returned through char** out-parameters are owned
 * by the caller and released with bose_string_free().
 */

#ifndef BOSE_H
#define BOSE_H

#include <stddef.h>

#if defined(_WIN32)
#define BOSE_API __declspec(dllexport)
#else
#define BOSE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bose_status {
    BOSE_OK = 0,
    BOSE_ERR_USAGE = 2,   /* bad arguments or incompatible settings */
    BOSE_ERR_DATA = 3,    /* malformed files or invariant violations */
    BOSE_ERR_BACKEND = 4, /* transport, protocol or capability failures */
    BOSE_ERR_IO = 5,      /* filesystem failures */
    BOSE_ERR_INTERNAL = 6
} bose_status;

typedef struct bose_benchmark bose_benchmark;
typedef struct bose_backend bose_backend;
typedef struct bose_run bose_run;
typedef struct bose_series bose_series;

BOSE_API const char* bose_version(void);

/* Message for the most recent failure on this thread; never NULL. */
BOSE_API const char* bose_last_error(void);

BOSE_API void bose_string_free(char* s);

/* ---------------- benchmarks ---------------- */

/* task_kind: "open_ended" | "multi_choice". strict rejects unknown fields. */
BOSE_API bose_status bose_benchmark_load(const char* path, const char* task_kind,
                                         int strict, bose_benchmark** out);
BOSE_API void bose_benchmark_free(bose_benchmark* bench);
BOSE_API const char* bose_benchmark_name(const bose_benchmark* bench);
BOSE_API size_t bose_benchmark_sample_count(const bose_benchmark* bench);
BOSE_API size_t bose_benchmark_exemplar_count(const bose_benchmark* bench);
/* Borrowed pointer, valid while the benchmark lives; NULL when out of range. */
BOSE_API const char* bose_benchmark_sample_id(const bose_benchmark* bench, size_t index);

/* ---------------- prompt rendering ---------------- */

/* template_kind: "iclip" | "instruct0" | "instructfew" | "light0" (long
 * names accepted too). Renders the prompt for one sample verbatim. */
BOSE_API bose_status bose_render_generation(const bose_benchmark* bench,
                                            const char* sample_id,
                                            const char* template_kind, unsigned shots,
                                            int cot_cue_in_target, char** out_text);

/* method: "option-ppl" | "blank-ppl". Emits a JSON list of
 * {context, continuation, option_index} objects. */
BOSE_API bose_status bose_render_scoring(const bose_benchmark* bench,
                                         const char* sample_id, const char* method,
                                         char** out_json);

/* ---------------- backends ---------------- */

/* url: completion endpoint ("http://host:port[/path]"; path defaults to
 * /v1/completions). token may be NULL; sent as a bearer header otherwise. */
BOSE_API bose_status bose_backend_open_http(const char* url, const char* model_id,
                                            const char* token, unsigned timeout_ms,
                                            unsigned retries, unsigned max_inflight,
                                            bose_backend** out);

/* script_path: JSON list of {match: {kind, value}, response: {text | tokens}}. */
BOSE_API bose_status bose_backend_open_mock(const char* script_path, unsigned max_inflight,
                                            bose_backend** out);
BOSE_API void bose_backend_free(bose_backend* backend);

/* ---------------- evaluation ---------------- */

typedef struct bose_gen_options {
    unsigned max_new_tokens;  /* 0 means the default of 1024 */
    double temperature;       /* 0 = greedy (the default profile) */
    unsigned shots;           /* exemplar count for few-shot templates */
    int cot_cue_in_target;    /* append the step-by-step cue to the target block */
    const char* judge_mode;   /* "strict" | "normalized"; NULL = normalized */
    int skip_errors;          /* exclude backend-errored samples instead of aborting */
} bose_gen_options;

BOSE_API bose_status bose_eval_open_ended(const bose_benchmark* bench,
                                          bose_backend* backend, const char* template_kind,
                                          const bose_gen_options* options, bose_run** out);

BOSE_API bose_status bose_eval_multichoice(const bose_benchmark* bench,
                                           bose_backend* backend, const char* method,
                                           int unnormalized, int skip_errors,
                                           bose_run** out);

BOSE_API double bose_run_accuracy(const bose_run* run);
/* step < 0 clears the step; model_role: "base" | "instruct". */
BOSE_API bose_status bose_run_set_meta(bose_run* run, const char* model_id, long long step,
                                       const char* model_role, const char* config_digest);
BOSE_API bose_status bose_run_to_json(const bose_run* run, char** out_json);
BOSE_API void bose_run_free(bose_run* run);

/* ---------------- run store ---------------- */

BOSE_API bose_status bose_store_append(const char* path, const bose_run* run);

/* Filters may be NULL/empty to match everything; model_role is "base",
 * "instruct" or NULL. label_by: "step" (checkpoint series) | "model". */
BOSE_API bose_status bose_store_load_series(const char* path, const char* model_prefix,
                                            const char* benchmark, const char* method,
                                            const char* model_role, const char* label_by,
                                            bose_series** out);
BOSE_API size_t bose_series_length(const bose_series* series);
BOSE_API const char* bose_series_label(const bose_series* series, size_t index);
BOSE_API double bose_series_value(const bose_series* series, size_t index);
BOSE_API void bose_series_free(bose_series* series);

/* ---------------- metrics ---------------- */

typedef struct bose_tau_report {
    double tau;
    long long concordant;  /* P */
    long long total_pairs; /* n(n-1)/2 */
    long long tie_pairs;   /* pairs tied in either list */
} bose_tau_report;

/* variant: "a" (the default formula) | "b" (tie-corrected). */
BOSE_API bose_status bose_kendall_tau(const double* a, const double* b, size_t n,
                                      const char* variant, bose_tau_report* out);
BOSE_API bose_status bose_stability(const bose_series* series, const char* variant,
                                    bose_tau_report* out);
BOSE_API bose_status bose_consistency(const bose_series* base, const bose_series* instruct,
                                      const char* variant, bose_tau_report* out);

/* ---------------- analytics helpers ---------------- */

/* exp of the mean negative log-probability (exp of the total when
 * unnormalized is set). */
BOSE_API bose_status bose_perplexity(const double* logprobs, size_t n, int unnormalized,
                                     double* out);

/* *out is NULL when nothing could be extracted (that is not an error). */
BOSE_API bose_status bose_extract_answer(const char* text, char** out);
BOSE_API bose_status bose_normalize_answer(const char* s, char** out);

/* mode: "strict" | "normalized". Returns 1/0, or -1 on error. pred may be
 * NULL to mean "nothing extracted". */
BOSE_API int bose_judge(const char* pred, const char* gold, const char* mode);

/* ---------------- reports ---------------- */

/* Original/treated/improve table plus the AVG row; format: "markdown"|"csv". */
BOSE_API bose_status bose_improvement_report(const char* const* names,
                                             const double* original, const double* treated,
                                             size_t n, const char* name_col,
                                             const char* original_col,
                                             const char* treated_col, const char* format,
                                             char** out_text);

/* Percentage improvement of the displayed AVG delta over the displayed AVG
 * original. Fails when the displayed original AVG rounds to zero. */
BOSE_API bose_status bose_improvement_pct(const double* original, const double* treated,
                                          size_t n, double* out_pct);

/* scores is row-major [method][experiment]. Adds AVG and AvgRank rows. */
BOSE_API bose_status bose_ablation_report(const char* const* methods, size_t n_methods,
                                          const char* const* experiments,
                                          size_t n_experiments, const double* scores,
                                          const char* format, char** out_text);

/* (step,score) csv for external plotting. */
BOSE_API bose_status bose_series_csv(const bose_series* series, char** out_text);

#ifdef __cplusplus
}
#endif

#endif /* BOSE_H */
