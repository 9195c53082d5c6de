// bose command-line front end. Everything goes through the C API in
// bose/bose.h; this translation unit never touches the core headers.

#include "bose/bose.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// plumbing

struct CliError {
    int exit_code;
    std::string kind;
    std::string message;
};

int exit_code_for(bose_status status) {
    switch (status) {
        case BOSE_OK: return 0;
        case BOSE_ERR_USAGE: return 2;
        case BOSE_ERR_BACKEND: return 4;
        default: return 3;
    }
}

const char* kind_for(bose_status status) {
    switch (status) {
        case BOSE_ERR_USAGE: return "usage";
        case BOSE_ERR_DATA: return "data";
        case BOSE_ERR_BACKEND: return "backend";
        case BOSE_ERR_IO: return "io";
        default: return "internal";
    }
}

[[noreturn]] void die(bose_status status) {
    throw CliError{exit_code_for(status), kind_for(status), bose_last_error()};
}

void check(bose_status status) {
    if (status != BOSE_OK) die(status);
}

[[noreturn]] void die_usage(const std::string& message) {
    throw CliError{2, "usage", message};
}

// owned C string from the API
struct ApiString {
    char* ptr = nullptr;
    ~ApiString() { bose_string_free(ptr); }
    std::string str() const { return ptr ? std::string(ptr) : std::string(); }
};

struct BenchmarkHandle {
    bose_benchmark* ptr = nullptr;
    ~BenchmarkHandle() { bose_benchmark_free(ptr); }
};
struct BackendHandle {
    bose_backend* ptr = nullptr;
    ~BackendHandle() { bose_backend_free(ptr); }
};
struct RunHandle {
    bose_run* ptr = nullptr;
    ~RunHandle() { bose_run_free(ptr); }
};
struct SeriesHandle {
    bose_series* ptr = nullptr;
    ~SeriesHandle() { bose_series_free(ptr); }
};

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

// every run prints its fully resolved settings and digests them into the
// record, so stored runs are only ever compared like for like
struct ResolvedConfig {
    std::map<std::string, std::string> entries;

    void set(const std::string& key, const std::string& value) { entries[key] = value; }
    void set(const std::string& key, long long value) { entries[key] = std::to_string(value); }
    void set(const std::string& key, bool value) { entries[key] = value ? "true" : "false"; }

    std::string canonical() const {
        std::string out;
        for (const auto& [k, v] : entries) out += k + "=" + v + "\n";
        return out;
    }
    std::string digest() const { return hex64(fnv1a64(canonical())); }

    void print(std::FILE* to) const {
        std::fprintf(to, "resolved config (digest %s):\n", digest().c_str());
        for (const auto& [k, v] : entries) std::fprintf(to, "  %s=%s\n", k.c_str(), v.c_str());
    }
};

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::fwrite(text.data(), 1, text.size(), stdout);
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw CliError{3, "io", "cannot write '" + out_path + "'"};
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

// ---------------------------------------------------------------------------
// shared option blocks

struct BackendFlags {
    std::string mock_script;
    std::string url;
    std::string model_id = "model";
    unsigned timeout_ms = 30000;
    unsigned retries = 2;
    unsigned max_inflight = 4;

    void attach(CLI::App* cmd) {
        cmd->add_option("--mock", mock_script, "mock backend script (JSON rule list)");
        cmd->add_option("--backend-url", url,
                        "completion endpoint URL (default: $BOSE_BACKEND_URL)");
        cmd->add_option("--model-id", model_id, "model identifier sent to the backend");
        cmd->add_option("--timeout-ms", timeout_ms, "per-request timeout");
        cmd->add_option("--retries", retries, "transport retries (max 5)");
        cmd->add_option("--max-inflight", max_inflight, "bounded request parallelism");
    }

    bose_backend* open(ResolvedConfig& config) const {
        bose_backend* backend = nullptr;
        if (!mock_script.empty()) {
            config.set("backend.kind", "mock");
            config.set("backend.script", mock_script);
            config.set("backend.max_inflight", static_cast<long long>(max_inflight));
            check(bose_backend_open_mock(mock_script.c_str(), max_inflight, &backend));
            return backend;
        }
        const std::string endpoint = !url.empty() ? url : env_or("BOSE_BACKEND_URL", "");
        if (endpoint.empty()) {
            die_usage("no backend: pass --mock or --backend-url (or set BOSE_BACKEND_URL)");
        }
        const std::string token = env_or("BOSE_BACKEND_TOKEN", "");
        config.set("backend.kind", "http");
        config.set("backend.url", endpoint);
        config.set("backend.model_id", model_id);
        config.set("backend.timeout_ms", static_cast<long long>(timeout_ms));
        config.set("backend.retries", static_cast<long long>(retries));
        config.set("backend.max_inflight", static_cast<long long>(max_inflight));
        check(bose_backend_open_http(endpoint.c_str(), model_id.c_str(),
                                     token.empty() ? nullptr : token.c_str(), timeout_ms,
                                     retries, max_inflight, &backend));
        return backend;
    }
};

struct RecordFlags {
    long long step = -1;
    std::string role = "base";
    std::string store_path;

    void attach(CLI::App* cmd) {
        cmd->add_option("--step", step, "checkpoint step recorded with the run");
        cmd->add_option("--role", role, "model role: base or instruct")
            ->check(CLI::IsMember({"base", "instruct"}));
        cmd->add_option("--store", store_path, "run store (JSONL) to append to");
    }
};

bool is_zero_shot_template(const std::string& tmpl) {
    return tmpl == "instruct0" || tmpl == "instruct_0shot" || tmpl == "light0" ||
           tmpl == "light_0shot";
}

json run_summary(const bose_run* run) {
    ApiString full;
    check(bose_run_to_json(run, &full.ptr));
    json record = json::parse(full.str());
    json summary;
    for (const auto& key :
         {"run_id", "model_id", "step", "model_role", "benchmark", "method", "accuracy",
          "config_digest", "created_at"}) {
        if (record.contains(key)) summary[key] = record[key];
    }
    summary["samples"] = record.contains("verdicts") ? record["verdicts"].size()
                                                     : record["ppl"].size();
    return summary;
}

struct TauRow {
    std::string name;
    bose_tau_report original{};
    bose_tau_report treated{};
};

json tau_to_json(const bose_tau_report& report) {
    return {{"tau", report.tau},
            {"concordant", report.concordant},
            {"total_pairs", report.total_pairs},
            {"tie_pairs", report.tie_pairs}};
}

// renders the improvement table + AVG percentage through the C API
struct ImprovementOutput {
    std::string table;
    bool has_pct = false;
    double pct = 0.0;
};

ImprovementOutput build_improvement(const std::vector<TauRow>& rows,
                                    const std::string& name_col,
                                    const std::string& original_col,
                                    const std::string& treated_col,
                                    const std::string& format) {
    std::vector<const char*> names;
    std::vector<double> original;
    std::vector<double> treated;
    for (const auto& row : rows) {
        names.push_back(row.name.c_str());
        original.push_back(row.original.tau);
        treated.push_back(row.treated.tau);
    }
    ImprovementOutput out;
    ApiString table;
    check(bose_improvement_report(names.data(), original.data(), treated.data(), names.size(),
                                  name_col.c_str(), original_col.c_str(), treated_col.c_str(),
                                  format.c_str(), &table.ptr));
    out.table = table.str();
    double pct = 0.0;
    if (bose_improvement_pct(original.data(), treated.data(), names.size(), &pct) == BOSE_OK) {
        out.has_pct = true;
        out.pct = pct;
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// eval

namespace {

int cmd_eval(CLI::App* cmd) {
    static std::string benchmark_path, task, tmpl, method, judge_mode = "normalized";
    static std::string sample_id, out_path, model_id_meta;
    static unsigned shots = 4, max_new_tokens = 1024;
    static double temperature = 0.0;
    static bool cot_cue = false, unnormalized = false, skip_errors = false;
    static bool dump_prompt = false, strict = false, json_out = false;
    static BackendFlags backend_flags;
    static RecordFlags record_flags;

    cmd->add_option("--benchmark", benchmark_path, "benchmark file (JSONL)")->required();
    cmd->add_option("--task", task, "task kind: open-ended or multi-choice")
        ->check(CLI::IsMember({"open-ended", "multi-choice", "open_ended", "multi_choice"}));
    cmd->add_option("--template", tmpl,
                    "generation template: iclip, instruct0, instructfew or light0");
    cmd->add_option("--method", method, "scoring method: blank-ppl or option-ppl");
    cmd->add_option("--shots", shots, "exemplar count for few-shot templates (default 4)");
    cmd->add_option("--judge-mode", judge_mode, "strict or normalized")
        ->check(CLI::IsMember({"strict", "normalized"}));
    cmd->add_option("--max-new-tokens", max_new_tokens, "generation budget");
    cmd->add_option("--temperature", temperature, "sampling temperature (0 = greedy)");
    cmd->add_flag("--cot-cue-in-target", cot_cue,
                  "append the step-by-step cue to the target block");
    cmd->add_flag("--unnormalized", unnormalized, "score exp(total NLL) instead of per-token");
    cmd->add_flag("--skip-errors", skip_errors,
                  "exclude backend-errored samples instead of aborting");
    cmd->add_flag("--dump-prompt", dump_prompt, "print the rendered prompt and exit");
    cmd->add_option("--sample", sample_id, "sample id for --dump-prompt");
    cmd->add_flag("--strict", strict, "reject unknown benchmark fields");
    cmd->add_flag("--json", json_out, "machine-readable stdout");
    cmd->add_option("--out", out_path, "write the primary output to a file");
    cmd->add_option("--record-model-id", model_id_meta,
                    "model id stored in the run record (defaults to --model-id)");
    backend_flags.attach(cmd);
    record_flags.attach(cmd);

    cmd->callback([cmd]() {
        // resolve the task kind and reject method/template mismatches
        if (!tmpl.empty() && !method.empty()) {
            die_usage("--template and --method are mutually exclusive");
        }
        std::string kind;
        if (!task.empty()) {
            kind = (task == "open-ended" || task == "open_ended") ? "open_ended"
                                                                  : "multi_choice";
        }
        if (kind.empty()) {
            if (!tmpl.empty()) kind = "open_ended";
            else if (!method.empty()) kind = "multi_choice";
            else die_usage("pick a --template (open-ended) or a --method (multi-choice)");
        }
        if (kind == "open_ended" && tmpl.empty()) {
            if (!method.empty()) die_usage("task/method mismatch: '" + method +
                                           "' scores multi-choice benchmarks");
            die_usage("open-ended eval needs --template");
        }
        if (kind == "multi_choice" && method.empty()) {
            if (!tmpl.empty()) die_usage("task/method mismatch: '" + tmpl +
                                         "' generates, multi-choice benchmarks score options");
            die_usage("multi-choice eval needs --method");
        }

        const bool open_ended = kind == "open_ended";
        unsigned effective_shots = shots;
        if (open_ended && is_zero_shot_template(tmpl)) {
            if (cmd->count("--shots") && shots != 0) {
                die_usage("'" + tmpl + "' is a 0-shot template; drop --shots");
            }
            effective_shots = 0;
        }

        BenchmarkHandle bench;
        check(bose_benchmark_load(benchmark_path.c_str(), kind.c_str(), strict ? 1 : 0,
                                  &bench.ptr));

        if (dump_prompt) {
            if (sample_id.empty()) die_usage("--dump-prompt needs --sample <id>");
            ApiString text;
            if (open_ended) {
                check(bose_render_generation(bench.ptr, sample_id.c_str(), tmpl.c_str(),
                                             effective_shots, cot_cue ? 1 : 0, &text.ptr));
            } else {
                check(bose_render_scoring(bench.ptr, sample_id.c_str(), method.c_str(),
                                          &text.ptr));
            }
            emit(text.str(), out_path);
            return;
        }

        ResolvedConfig config;
        config.set("subcommand", "eval");
        config.set("benchmark.file", benchmark_path);
        config.set("benchmark.task", kind);
        config.set("strict", strict);
        if (open_ended) {
            config.set("template", tmpl);
            config.set("shots", static_cast<long long>(effective_shots));
            config.set("judge_mode", judge_mode);
            config.set("max_new_tokens", static_cast<long long>(max_new_tokens));
            config.set("temperature", std::to_string(temperature));
            config.set("cot_cue_in_target", cot_cue);
        } else {
            config.set("method", method);
            config.set("unnormalized", unnormalized);
        }
        config.set("skip_errors", skip_errors);
        config.set("model.role", record_flags.role);
        if (record_flags.step >= 0) config.set("model.step", record_flags.step);

        BackendHandle backend;
        backend.ptr = backend_flags.open(config);
        config.print(stderr);

        RunHandle run;
        if (open_ended) {
            bose_gen_options options{};
            options.max_new_tokens = max_new_tokens;
            options.temperature = temperature;
            options.shots = effective_shots;
            options.cot_cue_in_target = cot_cue ? 1 : 0;
            options.judge_mode = judge_mode.c_str();
            options.skip_errors = skip_errors ? 1 : 0;
            check(bose_eval_open_ended(bench.ptr, backend.ptr, tmpl.c_str(), &options,
                                       &run.ptr));
        } else {
            check(bose_eval_multichoice(bench.ptr, backend.ptr, method.c_str(),
                                        unnormalized ? 1 : 0, skip_errors ? 1 : 0, &run.ptr));
        }

        const std::string record_model =
            !model_id_meta.empty() ? model_id_meta : backend_flags.model_id;
        check(bose_run_set_meta(run.ptr, record_model.c_str(), record_flags.step,
                                record_flags.role.c_str(), config.digest().c_str()));
        if (!record_flags.store_path.empty()) {
            check(bose_store_append(record_flags.store_path.c_str(), run.ptr));
        }

        if (json_out) {
            emit(run_summary(run.ptr).dump() + "\n", out_path);
        } else {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "accuracy: %.6f\n", bose_run_accuracy(run.ptr));
            emit(buf, out_path);
        }
    });
    return 0;
}

// ---------------------------------------------------------------------------
// stability

int cmd_stability(CLI::App* cmd) {
    static std::string store_path, model_prefix, role = "base", variant = "a";
    static std::string original_method = "instruct_0shot", bose_method = "iclip";
    static std::string format = "markdown", out_path;
    static std::vector<std::string> benchmarks;
    static bool json_out = false;

    cmd->add_option("--store", store_path, "run store (JSONL)")->required();
    cmd->add_option("--benchmark", benchmarks, "benchmark name(s) to analyze")->required();
    cmd->add_option("--original-method", original_method, "method for the Original column");
    cmd->add_option("--bose-method", bose_method, "method for the BOSE column");
    cmd->add_option("--model-prefix", model_prefix, "restrict to model ids with this prefix");
    cmd->add_option("--role", role, "model role to analyze")
        ->check(CLI::IsMember({"base", "instruct"}));
    cmd->add_option("--tau-variant", variant, "a (plain concordant-pair formula) or b (tie-corrected)")
        ->check(CLI::IsMember({"a", "b"}));
    cmd->add_option("--format", format, "markdown or csv")
        ->check(CLI::IsMember({"markdown", "csv"}));
    cmd->add_option("--out", out_path, "write the table to a file");
    cmd->add_flag("--json", json_out, "machine-readable stdout");

    cmd->callback([]() {
        std::vector<TauRow> rows;
        for (const auto& bench : benchmarks) {
            TauRow row;
            row.name = bench;
            for (const auto& [method, slot] :
                 {std::pair<std::string, bose_tau_report*>{original_method, &row.original},
                  std::pair<std::string, bose_tau_report*>{bose_method, &row.treated}}) {
                SeriesHandle series;
                check(bose_store_load_series(store_path.c_str(), model_prefix.c_str(),
                                             bench.c_str(), method.c_str(), role.c_str(),
                                             "step", &series.ptr));
                check(bose_stability(series.ptr, variant.c_str(), slot));
            }
            rows.push_back(row);
        }
        const auto output =
            build_improvement(rows, "Benchmark", "Original", "BOSE", format);

        if (json_out) {
            json doc;
            doc["kind"] = "stability";
            for (const auto& row : rows) {
                doc["taus"].push_back({{"benchmark", row.name},
                                       {"original", tau_to_json(row.original)},
                                       {"treated", tau_to_json(row.treated)}});
            }
            if (output.has_pct) doc["pct_improvement"] = output.pct;
            doc["report"] = output.table;
            emit(doc.dump() + "\n", out_path);
            return;
        }
        std::string text;
        for (const auto& row : rows) {
            char line[160];
            std::snprintf(line, sizeof(line),
                          "stability %s: original tau=%.3f, %s tau=%.3f\n", row.name.c_str(),
                          row.original.tau, bose_method.c_str(), row.treated.tau);
            text += line;
        }
        text += output.table;
        if (output.has_pct) {
            char line[96];
            std::snprintf(line, sizeof(line), "avg improvement: %+.1f%%\n", output.pct);
            text += line;
        }
        emit(text, out_path);
    });
    return 0;
}

// ---------------------------------------------------------------------------
// consistency

int cmd_consistency(CLI::App* cmd) {
    static std::string store_path, model_prefix, variant = "a", label_by = "model";
    static std::string base_original = "instruct_0shot", base_bose = "iclip";
    static std::string instruct_method = "instruct_0shot";
    static std::string format = "markdown", out_path;
    static std::vector<std::string> benchmarks;
    static bool json_out = false;

    cmd->add_option("--store", store_path, "run store (JSONL)")->required();
    cmd->add_option("--benchmark", benchmarks, "benchmark name(s) to analyze")->required();
    cmd->add_option("--original-method", base_original,
                    "base-model method for the Original column");
    cmd->add_option("--bose-method", base_bose, "base-model method for the ICLiP column");
    cmd->add_option("--instruct-method", instruct_method,
                    "method instruct models were evaluated with");
    cmd->add_option("--model-prefix", model_prefix, "restrict to model ids with this prefix");
    cmd->add_option("--label-by", label_by, "pair records by model or step")
        ->check(CLI::IsMember({"model", "step"}));
    cmd->add_option("--tau-variant", variant, "a (plain concordant-pair formula) or b (tie-corrected)")
        ->check(CLI::IsMember({"a", "b"}));
    cmd->add_option("--format", format, "markdown or csv")
        ->check(CLI::IsMember({"markdown", "csv"}));
    cmd->add_option("--out", out_path, "write the table to a file");
    cmd->add_flag("--json", json_out, "machine-readable stdout");

    cmd->callback([]() {
        std::vector<TauRow> rows;
        for (const auto& bench : benchmarks) {
            SeriesHandle instruct;
            check(bose_store_load_series(store_path.c_str(), model_prefix.c_str(),
                                         bench.c_str(), instruct_method.c_str(), "instruct",
                                         label_by.c_str(), &instruct.ptr));
            TauRow row;
            row.name = bench;
            for (const auto& [method, slot] :
                 {std::pair<std::string, bose_tau_report*>{base_original, &row.original},
                  std::pair<std::string, bose_tau_report*>{base_bose, &row.treated}}) {
                SeriesHandle base;
                check(bose_store_load_series(store_path.c_str(), model_prefix.c_str(),
                                             bench.c_str(), method.c_str(), "base",
                                             label_by.c_str(), &base.ptr));
                check(bose_consistency(base.ptr, instruct.ptr, variant.c_str(), slot));
            }
            rows.push_back(row);
        }
        const auto output = build_improvement(rows, "Benchmark", "Original", "ICLiP", format);

        if (json_out) {
            json doc;
            doc["kind"] = "consistency";
            for (const auto& row : rows) {
                doc["taus"].push_back({{"benchmark", row.name},
                                       {"original", tau_to_json(row.original)},
                                       {"treated", tau_to_json(row.treated)}});
            }
            if (output.has_pct) doc["pct_improvement"] = output.pct;
            doc["report"] = output.table;
            emit(doc.dump() + "\n", out_path);
            return;
        }
        std::string text;
        for (const auto& row : rows) {
            char line[160];
            std::snprintf(line, sizeof(line),
                          "consistency %s: original tau=%.3f, %s tau=%.3f\n",
                          row.name.c_str(), row.original.tau, base_bose.c_str(),
                          row.treated.tau);
            text += line;
        }
        text += output.table;
        if (output.has_pct) {
            char line[96];
            std::snprintf(line, sizeof(line), "avg improvement: %+.1f%%\n", output.pct);
            text += line;
        }
        emit(text, out_path);
    });
    return 0;
}

// ---------------------------------------------------------------------------
// ablate

int cmd_ablate(CLI::App* cmd) {
    static std::vector<std::string> benchmark_paths;
    static std::string judge_mode = "normalized", format = "markdown", out_path;
    static unsigned shots = 4, max_new_tokens = 1024;
    static bool cot_cue = false, skip_errors = false, strict = false, json_out = false;
    static BackendFlags backend_flags;
    static RecordFlags record_flags;

    cmd->add_option("--benchmark", benchmark_paths, "open-ended benchmark file(s)")
        ->required();
    cmd->add_option("--shots", shots, "exemplar count for the few-shot templates");
    cmd->add_option("--judge-mode", judge_mode, "strict or normalized")
        ->check(CLI::IsMember({"strict", "normalized"}));
    cmd->add_option("--max-new-tokens", max_new_tokens, "generation budget");
    cmd->add_flag("--cot-cue-in-target", cot_cue,
                  "append the step-by-step cue to the target block");
    cmd->add_flag("--skip-errors", skip_errors,
                  "exclude backend-errored samples instead of aborting");
    cmd->add_flag("--strict", strict, "reject unknown benchmark fields");
    cmd->add_option("--format", format, "markdown or csv")
        ->check(CLI::IsMember({"markdown", "csv"}));
    cmd->add_option("--out", out_path, "write the table to a file");
    cmd->add_flag("--json", json_out, "machine-readable stdout");
    backend_flags.attach(cmd);
    record_flags.attach(cmd);

    cmd->callback([]() {
        static const std::vector<std::string> kTemplates = {"instruct_0shot",
                                                            "instruct_fewshot",
                                                            "light_0shot", "iclip"};
        ResolvedConfig config;
        config.set("subcommand", "ablate");
        config.set("shots", static_cast<long long>(shots));
        config.set("judge_mode", judge_mode);
        config.set("max_new_tokens", static_cast<long long>(max_new_tokens));
        config.set("cot_cue_in_target", cot_cue);
        config.set("skip_errors", skip_errors);
        for (std::size_t i = 0; i < benchmark_paths.size(); ++i) {
            config.set("benchmark." + std::to_string(i), benchmark_paths[i]);
        }

        BackendHandle backend;
        backend.ptr = backend_flags.open(config);
        config.print(stderr);

        std::vector<std::string> experiment_names;
        std::vector<std::vector<double>> scores(kTemplates.size());

        for (const auto& path : benchmark_paths) {
            BenchmarkHandle bench;
            check(bose_benchmark_load(path.c_str(), "open_ended", strict ? 1 : 0, &bench.ptr));
            experiment_names.push_back(bose_benchmark_name(bench.ptr));

            for (std::size_t t = 0; t < kTemplates.size(); ++t) {
                const bool zero_shot = is_zero_shot_template(kTemplates[t]);
                bose_gen_options options{};
                options.max_new_tokens = max_new_tokens;
                options.temperature = 0.0;
                options.shots = zero_shot ? 0 : shots;
                options.cot_cue_in_target = cot_cue ? 1 : 0;
                options.judge_mode = judge_mode.c_str();
                options.skip_errors = skip_errors ? 1 : 0;
                RunHandle run;
                check(bose_eval_open_ended(bench.ptr, backend.ptr, kTemplates[t].c_str(),
                                           &options, &run.ptr));
                check(bose_run_set_meta(run.ptr, backend_flags.model_id.c_str(),
                                        record_flags.step, record_flags.role.c_str(),
                                        config.digest().c_str()));
                if (!record_flags.store_path.empty()) {
                    check(bose_store_append(record_flags.store_path.c_str(), run.ptr));
                }
                scores[t].push_back(bose_run_accuracy(run.ptr));
            }
        }

        std::vector<const char*> method_ptrs, experiment_ptrs;
        std::vector<double> flat;
        for (const auto& m : kTemplates) method_ptrs.push_back(m.c_str());
        for (const auto& e : experiment_names) experiment_ptrs.push_back(e.c_str());
        for (const auto& row : scores) flat.insert(flat.end(), row.begin(), row.end());

        ApiString table;
        check(bose_ablation_report(method_ptrs.data(), method_ptrs.size(),
                                   experiment_ptrs.data(), experiment_ptrs.size(), flat.data(),
                                   format.c_str(), &table.ptr));

        if (json_out) {
            json doc;
            doc["kind"] = "ablate";
            for (std::size_t t = 0; t < kTemplates.size(); ++t) {
                for (std::size_t e = 0; e < experiment_names.size(); ++e) {
                    doc["scores"][kTemplates[t]][experiment_names[e]] = scores[t][e];
                }
            }
            doc["report"] = table.str();
            emit(doc.dump() + "\n", out_path);
        } else {
            emit(table.str(), out_path);
        }
    });
    return 0;
}

// ---------------------------------------------------------------------------
// report

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliError{3, "io", "cannot open '" + path + "'"};
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

bool parse_double(const std::string& s, double& out) {
    try {
        std::size_t used = 0;
        out = std::stod(s, &used);
        return used == s.size();
    } catch (...) {
        return false;
    }
}

int cmd_report(CLI::App* cmd) {
    static std::string taus_path, grid_path, store_path;
    static std::string benchmark, method, model_prefix, role = "base";
    static std::string name_col = "Benchmark", original_col = "Original",
                       treated_col = "Treated";
    static std::string format = "markdown", out_path;
    static bool curve = false, json_out = false;

    cmd->add_option("--taus", taus_path,
                    "csv of name,original,treated rows -> improvement table");
    cmd->add_option("--grid", grid_path,
                    "csv of method,experiment,score rows -> ablation table");
    cmd->add_flag("--curve", curve, "emit a (step,score) csv from the store");
    cmd->add_option("--store", store_path, "run store (JSONL), for --curve");
    cmd->add_option("--benchmark", benchmark, "benchmark name, for --curve");
    cmd->add_option("--method", method, "method name, for --curve");
    cmd->add_option("--model-prefix", model_prefix, "model id prefix, for --curve");
    cmd->add_option("--role", role, "model role, for --curve")
        ->check(CLI::IsMember({"base", "instruct"}));
    cmd->add_option("--name-col", name_col, "label of the name column");
    cmd->add_option("--original-col", original_col, "label of the original column");
    cmd->add_option("--treated-col", treated_col, "label of the treated column");
    cmd->add_option("--format", format, "markdown or csv")
        ->check(CLI::IsMember({"markdown", "csv"}));
    cmd->add_option("--out", out_path, "write the report to a file");
    cmd->add_flag("--json", json_out, "machine-readable stdout");

    cmd->callback([]() {
        const int modes = (!taus_path.empty()) + (!grid_path.empty()) + (curve ? 1 : 0);
        if (modes != 1) die_usage("pick exactly one of --taus, --grid or --curve");

        std::string text;
        json doc;
        if (!taus_path.empty()) {
            auto rows = read_csv(taus_path);
            std::vector<std::string> names;
            std::vector<double> original, treated;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].size() != 3) {
                    throw CliError{3, "data",
                                   taus_path + ": row " + std::to_string(i + 1) +
                                       " needs name,original,treated"};
                }
                double o = 0.0, t = 0.0;
                if (!parse_double(rows[i][1], o) || !parse_double(rows[i][2], t)) {
                    if (i == 0) continue; // header row
                    throw CliError{3, "data",
                                   taus_path + ": row " + std::to_string(i + 1) +
                                       " has non-numeric values"};
                }
                names.push_back(rows[i][0]);
                original.push_back(o);
                treated.push_back(t);
            }
            if (names.empty()) throw CliError{3, "data", taus_path + ": no data rows"};

            std::vector<TauRow> tau_rows(names.size());
            for (std::size_t i = 0; i < names.size(); ++i) {
                tau_rows[i].name = names[i];
                tau_rows[i].original.tau = original[i];
                tau_rows[i].treated.tau = treated[i];
            }
            const auto output =
                build_improvement(tau_rows, name_col, original_col, treated_col, format);
            text = output.table;
            if (output.has_pct) {
                char line[96];
                std::snprintf(line, sizeof(line), "avg improvement: %+.1f%%\n", output.pct);
                text += line;
                doc["pct_improvement"] = output.pct;
            }
            doc["kind"] = "improvement";
        } else if (!grid_path.empty()) {
            auto rows = read_csv(grid_path);
            std::vector<std::string> methods, experiments;
            std::map<std::string, std::map<std::string, double>> cells;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].size() != 3) {
                    throw CliError{3, "data",
                                   grid_path + ": row " + std::to_string(i + 1) +
                                       " needs method,experiment,score"};
                }
                double v = 0.0;
                if (!parse_double(rows[i][2], v)) {
                    if (i == 0) continue; // header row
                    throw CliError{3, "data",
                                   grid_path + ": row " + std::to_string(i + 1) +
                                       " has a non-numeric score"};
                }
                if (!cells.count(rows[i][0])) methods.push_back(rows[i][0]);
                if (std::find(experiments.begin(), experiments.end(), rows[i][1]) ==
                    experiments.end()) {
                    experiments.push_back(rows[i][1]);
                }
                cells[rows[i][0]][rows[i][1]] = v;
            }
            if (methods.empty()) throw CliError{3, "data", grid_path + ": no data rows"};
            std::vector<double> flat;
            for (const auto& m : methods) {
                for (const auto& e : experiments) {
                    const auto it = cells[m].find(e);
                    if (it == cells[m].end()) {
                        throw CliError{3, "data",
                                       grid_path + ": missing score for (" + m + ", " + e + ")"};
                    }
                    flat.push_back(it->second);
                }
            }
            std::vector<const char*> method_ptrs, experiment_ptrs;
            for (const auto& m : methods) method_ptrs.push_back(m.c_str());
            for (const auto& e : experiments) experiment_ptrs.push_back(e.c_str());
            ApiString table;
            check(bose_ablation_report(method_ptrs.data(), method_ptrs.size(),
                                       experiment_ptrs.data(), experiment_ptrs.size(),
                                       flat.data(), format.c_str(), &table.ptr));
            text = table.str();
            doc["kind"] = "grid";
        } else {
            if (store_path.empty() || benchmark.empty() || method.empty()) {
                die_usage("--curve needs --store, --benchmark and --method");
            }
            SeriesHandle series;
            check(bose_store_load_series(store_path.c_str(), model_prefix.c_str(),
                                         benchmark.c_str(), method.c_str(), role.c_str(),
                                         "step", &series.ptr));
            ApiString csv;
            check(bose_series_csv(series.ptr, &csv.ptr));
            text = csv.str();
            doc["kind"] = "curve";
        }

        if (json_out) {
            doc["report"] = text;
            emit(doc.dump() + "\n", out_path);
        } else {
            emit(text, out_path);
        }
    });
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bose — base-model evaluation harness"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file; flags override it");
    app.set_version_flag("--version", std::string(bose_version()));
    bool seedless = false;
    app.add_flag("--seedless", seedless,
                 "assert deterministic operation (the harness uses no randomness)");

    cmd_eval(app.add_subcommand("eval", "run one benchmark against a backend"));
    cmd_stability(app.add_subcommand("stability",
                                     "Kendall tau of scores vs. checkpoint steps"));
    cmd_consistency(app.add_subcommand("consistency",
                                       "Kendall tau between base and instruct scores"));
    cmd_ablate(app.add_subcommand("ablate", "run all four templates and rank them"));
    cmd_report(app.add_subcommand("report", "format stored results as tables"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help / --version
        json err = {{"error",
                     {{"code", 2}, {"kind", "usage"}, {"message", e.what()}}}};
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return 2;
    } catch (const CliError& e) {
        json err = {{"error",
                     {{"code", e.exit_code}, {"kind", e.kind}, {"message", e.message}}}};
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return e.exit_code;
    }
    return 0;
}
