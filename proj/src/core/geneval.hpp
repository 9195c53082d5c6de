#pragma once

#include "backend.hpp"
#include "dataset.hpp"
#include "prompting.hpp"
#include "run_record.hpp"

#include <optional>
#include <string>

namespace bose {

struct GenerationResult {
    std::string text;      // stop-trimmed completion
    bool truncated = false; // token budget hit before any stop
};

/// Sends a rendered prompt through the backend and strips everything from
/// the first stop hit on. The returned text never contains a stop sequence.
GenerationResult generate(const GenerationPrompt& prompt, Backend& backend,
                          const GenConfig& cfg);

/// Content of the last balanced \boxed{...} group, else the last numeric
/// token (sign, digits, optional decimal part or simple fraction), else
/// nothing.
std::optional<std::string> extract_answer(const std::string& text);

/// Canonical answer form: punctuation stripped, fractions reduced, decimals
/// minimal, pure-alphabetic answers case-folded. Idempotent.
std::string normalize_answer(const std::string& s);

/// strict: byte equality. normalized: equality after normalize_answer, or
/// numeric equality within relative tolerance 1e-6 when both sides parse as
/// rationals/decimals.
bool judge(const std::optional<std::string>& pred, const std::string& gold, JudgeMode mode);

struct OpenEndedOptions {
    TemplateKind kind = TemplateKind::iclip;
    std::size_t shots = 0;
    JudgeMode judge_mode = JudgeMode::normalized;
    GenConfig gen;
    PromptOptions prompt;
    bool skip_errors = false;
};

/// Per sample: render -> generate -> extract -> judge, with bounded
/// parallelism and order-restored results.
RunRecord eval_open_ended(const Benchmark& bench, Backend& backend,
                          const OpenEndedOptions& opts);

/// Re-judges a set of verdicts' raw outputs under another mode; used for
/// strict-vs-normalized comparisons without re-running the backend.
double rejudge_accuracy(const std::vector<Verdict>& verdicts,
                        const std::vector<std::string>& golds, JudgeMode mode);

} // namespace bose
