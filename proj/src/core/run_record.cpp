#include "run_record.hpp"

#include "error.hpp"
#include "util.hpp"

namespace bose {

const char* to_string(ModelRole role) {
    return role == ModelRole::base ? "base" : "instruct";
}

ModelRole model_role_from_string(const std::string& s) {
    if (s == "base") return ModelRole::base;
    if (s == "instruct") return ModelRole::instruct;
    throw UsageError("unknown model role '" + s + "' (expected base or instruct)");
}

const char* to_string(JudgeMode mode) {
    return mode == JudgeMode::strict ? "strict" : "normalized";
}

JudgeMode judge_mode_from_string(const std::string& s) {
    if (s == "strict") return JudgeMode::strict;
    if (s == "normalized") return JudgeMode::normalized;
    throw UsageError("unknown judge mode '" + s + "' (expected strict or normalized)");
}

std::size_t RunRecord::scored_count() const {
    std::size_t n = 0;
    for (const auto& v : verdicts)
        if (!v.errored) ++n;
    for (const auto& r : ppl_rows)
        if (!r.errored) ++n;
    return n;
}

std::size_t RunRecord::correct_count() const {
    std::size_t n = 0;
    for (const auto& v : verdicts)
        if (!v.errored && v.correct) ++n;
    for (const auto& r : ppl_rows)
        if (!r.errored && r.correct) ++n;
    return n;
}

std::string compute_run_id(const RunRecord& record) {
    std::string key = record.config_digest;
    key += '|';
    key += record.model_id;
    key += '|';
    key += record.step ? std::to_string(*record.step) : std::string("-");
    key += '|';
    key += to_string(record.model_role);
    key += '|';
    key += record.benchmark;
    key += '|';
    key += record.method;
    key += '|';
    key += std::to_string(record.created_at_ms);
    return fnv1a64_hex(key);
}

} // namespace bose
