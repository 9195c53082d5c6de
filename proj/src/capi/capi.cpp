#include "bose/bose.h"

#include "../core/dataset.hpp"
#include "../core/error.hpp"
#include "../core/geneval.hpp"
#include "../core/http_backend.hpp"
#include "../core/metrics.hpp"
#include "../core/mock_backend.hpp"
#include "../core/ppl_scoring.hpp"
#include "../core/prompting.hpp"
#include "../core/store.hpp"
#include "../core/util.hpp"

#include <json.hpp>

#include <cstdlib>
#include <cstring>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

bose_status fail(bose_status code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

// Maps core exceptions onto status codes; the callable returns BOSE_OK.
template <typename Fn>
bose_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const bose::UsageError& e) {
        return fail(BOSE_ERR_USAGE, e.what());
    } catch (const bose::DataError& e) {
        return fail(BOSE_ERR_DATA, e.what());
    } catch (const bose::BackendError& e) {
        return fail(BOSE_ERR_BACKEND, e.what());
    } catch (const bose::IoError& e) {
        return fail(BOSE_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(BOSE_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(BOSE_ERR_INTERNAL, "unknown error");
    }
}

std::string str_or(const char* s, const char* fallback = "") {
    return s ? std::string(s) : std::string(fallback);
}

const bose::Sample& find_sample(const bose::Benchmark& bench, const std::string& id) {
    for (const auto& s : bench.samples) {
        if (s.id == id) return s;
    }
    throw bose::DataError("no sample with id '" + id + "' in benchmark '" + bench.name + "'");
}

void fill_tau(const bose::TauReport& report, bose_tau_report* out) {
    out->tau = report.tau;
    out->concordant = report.concordant;
    out->total_pairs = report.total_pairs;
    out->tie_pairs = report.tie_pairs;
}

using NamedValues = std::vector<std::pair<std::string, double>>;

void build_named(const char* const* names, const double* original, const double* treated,
                 size_t n, NamedValues& orig_rows, NamedValues& treat_rows) {
    for (size_t i = 0; i < n; ++i) {
        orig_rows.emplace_back(names[i], original[i]);
        treat_rows.emplace_back(names[i], treated[i]);
    }
}

} // namespace

struct bose_benchmark {
    bose::Benchmark value;
};

struct bose_backend {
    std::unique_ptr<bose::Backend> value;
};

struct bose_run {
    bose::RunRecord value;
};

struct bose_series {
    bose::ScoreSeries value;
};

extern "C" {

const char* bose_version(void) { return "0.1.0"; }

const char* bose_last_error(void) { return g_last_error.c_str(); }

void bose_string_free(char* s) { std::free(s); }

/* ---------------- benchmarks ---------------- */

bose_status bose_benchmark_load(const char* path, const char* task_kind, int strict,
                                bose_benchmark** out) {
    return guarded([&]() -> bose_status {
        if (!path || !task_kind || !out) return fail(BOSE_ERR_USAGE, "NULL argument");
        auto bench = std::make_unique<bose_benchmark>();
        bench->value = bose::load_benchmark(path, bose::task_kind_from_string(task_kind),
                                            strict != 0);
        *out = bench.release();
        return BOSE_OK;
    });
}

void bose_benchmark_free(bose_benchmark* bench) { delete bench; }

const char* bose_benchmark_name(const bose_benchmark* bench) {
    return bench ? bench->value.name.c_str() : "";
}

size_t bose_benchmark_sample_count(const bose_benchmark* bench) {
    return bench ? bench->value.samples.size() : 0;
}

size_t bose_benchmark_exemplar_count(const bose_benchmark* bench) {
    return bench ? bench->value.exemplars.size() : 0;
}

const char* bose_benchmark_sample_id(const bose_benchmark* bench, size_t index) {
    if (!bench || index >= bench->value.samples.size()) return nullptr;
    return bench->value.samples[index].id.c_str();
}

/* ---------------- prompt rendering ---------------- */

bose_status bose_render_generation(const bose_benchmark* bench, const char* sample_id,
                                   const char* template_kind, unsigned shots,
                                   int cot_cue_in_target, char** out_text) {
    return guarded([&]() -> bose_status {
        if (!bench || !sample_id || !template_kind || !out_text) {
            return fail(BOSE_ERR_USAGE, "NULL argument");
        }
        const auto& sample = find_sample(bench->value, sample_id);
        const auto kind = bose::template_kind_from_string(template_kind);
        const auto shot_list = bose::select_fewshot(bench->value, shots);
        bose::PromptOptions opts;
        opts.cot_cue_in_target = cot_cue_in_target != 0;
        const auto prompt = bose::render_generation(sample, shot_list, kind, opts);
        *out_text = dup_string(prompt.text);
        return BOSE_OK;
    });
}

bose_status bose_render_scoring(const bose_benchmark* bench, const char* sample_id,
                                const char* method, char** out_json) {
    return guarded([&]() -> bose_status {
        if (!bench || !sample_id || !method || !out_json) {
            return fail(BOSE_ERR_USAGE, "NULL argument");
        }
        const auto& sample = find_sample(bench->value, sample_id);
        const auto m = bose::multichoice_method_from_string(method);
        const auto prompts = m == bose::MultiChoiceMethod::option_ppl
                                 ? bose::render_option_ppl(sample)
                                 : bose::render_blank_ppl(sample);
        json arr = json::array();
        for (const auto& p : prompts) {
            arr.push_back({{"context", p.context},
                           {"continuation", p.continuation},
                           {"option_index", p.option_index}});
        }
        *out_json = dup_string(arr.dump());
        return BOSE_OK;
    });
}

/* ---------------- backends ---------------- */

bose_status bose_backend_open_http(const char* url, const char* model_id, const char* token,
                                   unsigned timeout_ms, unsigned retries,
                                   unsigned max_inflight, bose_backend** out) {
    return guarded([&]() -> bose_status {
        if (!url || !out) return fail(BOSE_ERR_USAGE, "NULL argument");
        bose::BackendSpec spec;
        spec.kind = bose::BackendKind::http;
        spec.endpoint = url;
        spec.model_id = str_or(model_id, "model");
        spec.bearer_token = str_or(token);
        if (timeout_ms > 0) spec.timeout_ms = timeout_ms;
        spec.retries = retries;
        spec.max_inflight = max_inflight == 0 ? 4 : max_inflight;
        auto backend = std::make_unique<bose_backend>();
        backend->value = std::make_unique<bose::HttpBackend>(std::move(spec));
        *out = backend.release();
        return BOSE_OK;
    });
}

bose_status bose_backend_open_mock(const char* script_path, unsigned max_inflight,
                                   bose_backend** out) {
    return guarded([&]() -> bose_status {
        if (!script_path || !out) return fail(BOSE_ERR_USAGE, "NULL argument");
        bose::BackendSpec spec;
        spec.kind = bose::BackendKind::mock;
        spec.model_id = "mock";
        spec.max_inflight = max_inflight == 0 ? 4 : max_inflight;
        auto backend = std::make_unique<bose_backend>();
        backend->value = bose::MockBackend::from_file(script_path, std::move(spec));
        *out = backend.release();
        return BOSE_OK;
    });
}

void bose_backend_free(bose_backend* backend) { delete backend; }

/* ---------------- evaluation ---------------- */

bose_status bose_eval_open_ended(const bose_benchmark* bench, bose_backend* backend,
                                 const char* template_kind, const bose_gen_options* options,
                                 bose_run** out) {
    return guarded([&]() -> bose_status {
        if (!bench || !backend || !template_kind || !out) {
            return fail(BOSE_ERR_USAGE, "NULL argument");
        }
        bose::OpenEndedOptions opts;
        opts.kind = bose::template_kind_from_string(template_kind);
        if (options) {
            if (options->max_new_tokens > 0) opts.gen.max_new_tokens = options->max_new_tokens;
            opts.gen.temperature = options->temperature;
            opts.shots = options->shots;
            opts.prompt.cot_cue_in_target = options->cot_cue_in_target != 0;
            if (options->judge_mode) {
                opts.judge_mode = bose::judge_mode_from_string(options->judge_mode);
            }
            opts.skip_errors = options->skip_errors != 0;
        }
        auto run = std::make_unique<bose_run>();
        run->value = bose::eval_open_ended(bench->value, *backend->value, opts);
        *out = run.release();
        return BOSE_OK;
    });
}

bose_status bose_eval_multichoice(const bose_benchmark* bench, bose_backend* backend,
                                  const char* method, int unnormalized, int skip_errors,
                                  bose_run** out) {
    return guarded([&]() -> bose_status {
        if (!bench || !backend || !method || !out) {
            return fail(BOSE_ERR_USAGE, "NULL argument");
        }
        bose::MultiChoiceOptions opts;
        opts.method = bose::multichoice_method_from_string(method);
        opts.unnormalized = unnormalized != 0;
        opts.skip_errors = skip_errors != 0;
        auto run = std::make_unique<bose_run>();
        run->value = bose::eval_multichoice(bench->value, *backend->value, opts);
        *out = run.release();
        return BOSE_OK;
    });
}

double bose_run_accuracy(const bose_run* run) { return run ? run->value.accuracy : -1.0; }

bose_status bose_run_set_meta(bose_run* run, const char* model_id, long long step,
                              const char* model_role, const char* config_digest) {
    return guarded([&]() -> bose_status {
        if (!run) return fail(BOSE_ERR_USAGE, "NULL argument");
        if (model_id) run->value.model_id = model_id;
        if (step >= 0) {
            run->value.step = step;
        } else {
            run->value.step.reset();
        }
        if (model_role) {
            run->value.model_role = bose::model_role_from_string(model_role);
        }
        if (config_digest) run->value.config_digest = config_digest;
        run->value.run_id = bose::compute_run_id(run->value);
        return BOSE_OK;
    });
}

bose_status bose_run_to_json(const bose_run* run, char** out_json) {
    return guarded([&]() -> bose_status {
        if (!run || !out_json) return fail(BOSE_ERR_USAGE, "NULL argument");
        *out_json = dup_string(bose::record_to_jsonl(run->value));
        return BOSE_OK;
    });
}

void bose_run_free(bose_run* run) { delete run; }

/* ---------------- run store ---------------- */

bose_status bose_store_append(const char* path, const bose_run* run) {
    return guarded([&]() -> bose_status {
        if (!path || !run) return fail(BOSE_ERR_USAGE, "NULL argument");
        bose::append_run(path, run->value);
        return BOSE_OK;
    });
}

bose_status bose_store_load_series(const char* path, const char* model_prefix,
                                   const char* benchmark, const char* method,
                                   const char* model_role, const char* label_by,
                                   bose_series** out) {
    return guarded([&]() -> bose_status {
        if (!path || !out) return fail(BOSE_ERR_USAGE, "NULL argument");
        bose::StoreFilter filter;
        filter.model_prefix = str_or(model_prefix);
        filter.benchmark = str_or(benchmark);
        filter.method = str_or(method);
        if (model_role && *model_role) {
            filter.model_role = bose::model_role_from_string(model_role);
        }
        bose::SeriesLabel label = bose::SeriesLabel::step;
        const std::string label_str = str_or(label_by, "step");
        if (label_str == "model") {
            label = bose::SeriesLabel::model;
        } else if (label_str != "step") {
            return fail(BOSE_ERR_USAGE, "label_by must be 'step' or 'model'");
        }
        auto series = std::make_unique<bose_series>();
        series->value = bose::load_series(path, filter, label);
        *out = series.release();
        return BOSE_OK;
    });
}

size_t bose_series_length(const bose_series* series) {
    return series ? series->value.labels.size() : 0;
}

const char* bose_series_label(const bose_series* series, size_t index) {
    if (!series || index >= series->value.labels.size()) return nullptr;
    return series->value.labels[index].c_str();
}

double bose_series_value(const bose_series* series, size_t index) {
    if (!series || index >= series->value.values.size()) return 0.0;
    return series->value.values[index];
}

void bose_series_free(bose_series* series) { delete series; }

/* ---------------- metrics ---------------- */

bose_status bose_kendall_tau(const double* a, const double* b, size_t n, const char* variant,
                             bose_tau_report* out) {
    return guarded([&]() -> bose_status {
        if (!a || !b || !out) return fail(BOSE_ERR_USAGE, "NULL argument");
        const auto v = bose::tau_variant_from_string(str_or(variant, "a"));
        fill_tau(bose::kendall_tau(std::span(a, n), std::span(b, n), v), out);
        return BOSE_OK;
    });
}

bose_status bose_stability(const bose_series* series, const char* variant,
                           bose_tau_report* out) {
    return guarded([&]() -> bose_status {
        if (!series || !out) return fail(BOSE_ERR_USAGE, "NULL argument");
        const auto v = bose::tau_variant_from_string(str_or(variant, "a"));
        fill_tau(bose::stability(series->value, v), out);
        return BOSE_OK;
    });
}

bose_status bose_consistency(const bose_series* base, const bose_series* instruct,
                             const char* variant, bose_tau_report* out) {
    return guarded([&]() -> bose_status {
        if (!base || !instruct || !out) return fail(BOSE_ERR_USAGE, "NULL argument");
        const auto v = bose::tau_variant_from_string(str_or(variant, "a"));
        fill_tau(bose::consistency(base->value, instruct->value, v), out);
        return BOSE_OK;
    });
}

/* ---------------- analytics helpers ---------------- */

bose_status bose_perplexity(const double* logprobs, size_t n, int unnormalized, double* out) {
    return guarded([&]() -> bose_status {
        if (!logprobs || !out) return fail(BOSE_ERR_USAGE, "NULL argument");
        *out = bose::perplexity(std::span(logprobs, n), unnormalized != 0);
        return BOSE_OK;
    });
}

bose_status bose_extract_answer(const char* text, char** out) {
    return guarded([&]() -> bose_status {
        if (!text || !out) return fail(BOSE_ERR_USAGE, "NULL argument");
        const auto extracted = bose::extract_answer(text);
        *out = extracted ? dup_string(*extracted) : nullptr;
        return BOSE_OK;
    });
}

bose_status bose_normalize_answer(const char* s, char** out) {
    return guarded([&]() -> bose_status {
        if (!s || !out) return fail(BOSE_ERR_USAGE, "NULL argument");
        *out = dup_string(bose::normalize_answer(s));
        return BOSE_OK;
    });
}

int bose_judge(const char* pred, const char* gold, const char* mode) {
    int verdict = -1;
    const bose_status rc = guarded([&]() -> bose_status {
        if (!gold || !mode) return fail(BOSE_ERR_USAGE, "NULL argument");
        std::optional<std::string> p;
        if (pred) p = std::string(pred);
        verdict = bose::judge(p, gold, bose::judge_mode_from_string(mode)) ? 1 : 0;
        return BOSE_OK;
    });
    return rc == BOSE_OK ? verdict : -1;
}

/* ---------------- reports ---------------- */

bose_status bose_improvement_report(const char* const* names, const double* original,
                                    const double* treated, size_t n, const char* name_col,
                                    const char* original_col, const char* treated_col,
                                    const char* format, char** out_text) {
    return guarded([&]() -> bose_status {
        if (!names || !original || !treated || !out_text) {
            return fail(BOSE_ERR_USAGE, "NULL argument");
        }
        NamedValues orig_rows, treat_rows;
        build_named(names, original, treated, n, orig_rows, treat_rows);
        const auto table = bose::improvement(orig_rows, treat_rows);
        const auto text = bose::improvement_report(
            table, str_or(name_col, "Benchmark"), str_or(original_col, "Original"),
            str_or(treated_col, "Treated"),
            bose::report_format_from_string(str_or(format, "markdown")));
        *out_text = dup_string(text);
        return BOSE_OK;
    });
}

bose_status bose_improvement_pct(const double* original, const double* treated, size_t n,
                                 double* out_pct) {
    return guarded([&]() -> bose_status {
        if (!original || !treated || !out_pct) return fail(BOSE_ERR_USAGE, "NULL argument");
        NamedValues orig_rows, treat_rows;
        for (size_t i = 0; i < n; ++i) {
            orig_rows.emplace_back(std::to_string(i), original[i]);
            treat_rows.emplace_back(std::to_string(i), treated[i]);
        }
        const auto table = bose::improvement(orig_rows, treat_rows);
        if (!table.has_pct) {
            return fail(BOSE_ERR_DATA, "displayed original AVG rounds to zero");
        }
        *out_pct = table.pct_improvement;
        return BOSE_OK;
    });
}

bose_status bose_ablation_report(const char* const* methods, size_t n_methods,
                                 const char* const* experiments, size_t n_experiments,
                                 const double* scores, const char* format, char** out_text) {
    return guarded([&]() -> bose_status {
        if (!methods || !experiments || !scores || !out_text) {
            return fail(BOSE_ERR_USAGE, "NULL argument");
        }
        std::vector<std::string> method_names(methods, methods + n_methods);
        std::vector<std::string> experiment_names(experiments, experiments + n_experiments);
        std::vector<std::vector<double>> grid(n_methods);
        for (size_t m = 0; m < n_methods; ++m) {
            grid[m].assign(scores + m * n_experiments, scores + (m + 1) * n_experiments);
        }
        const auto text =
            bose::ablation_report(method_names, experiment_names, grid,
                                  bose::report_format_from_string(str_or(format, "markdown")));
        *out_text = dup_string(text);
        return BOSE_OK;
    });
}

bose_status bose_series_csv(const bose_series* series, char** out_text) {
    return guarded([&]() -> bose_status {
        if (!series || !out_text) return fail(BOSE_ERR_USAGE, "NULL argument");
        *out_text = dup_string(bose::series_csv(series->value));
        return BOSE_OK;
    });
}

} // extern "C"
