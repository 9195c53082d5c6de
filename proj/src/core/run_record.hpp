#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bose {

enum class ModelRole { base, instruct };
enum class JudgeMode { strict, normalized };

const char* to_string(ModelRole role);
ModelRole model_role_from_string(const std::string& s);
const char* to_string(JudgeMode mode);
JudgeMode judge_mode_from_string(const std::string& s);

/// Outcome of one open-ended sample, kept with the raw output for audit.
struct Verdict {
    std::string sample_id;
    std::string raw_output;
    std::optional<std::string> extracted;
    std::optional<std::string> normalized_pred;
    std::string normalized_gold;
    bool correct = false;
    JudgeMode judge_mode = JudgeMode::normalized;
    bool truncated = false;
    bool errored = false;
    std::string error;
};

/// Outcome of one multi-choice sample: the per-option perplexity vector.
struct PplRow {
    std::string sample_id;
    std::vector<double> ppls;
    int chosen = -1;
    int gold = -1;
    bool correct = false;
    bool errored = false;
    std::string error;
};

/// One persisted (model, step, benchmark, method) evaluation.
struct RunRecord {
    int schema = 1;
    std::string run_id;
    std::string model_id;
    std::optional<std::int64_t> step;
    ModelRole model_role = ModelRole::base;
    std::string benchmark;
    std::string method;
    double accuracy = 0.0;
    std::vector<Verdict> verdicts; // open-ended payload
    std::vector<PplRow> ppl_rows;  // multi-choice payload
    std::string config_digest;
    std::int64_t created_at_ms = 0;
    bool skip_errors = false;

    /// Samples that actually count toward accuracy.
    std::size_t scored_count() const;
    std::size_t correct_count() const;
};

/// Deterministic id from the record's identity fields and timestamp.
std::string compute_run_id(const RunRecord& record);

} // namespace bose
