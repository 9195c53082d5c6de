#pragma once

#include "backend.hpp"
#include "dataset.hpp"
#include "run_record.hpp"

#include <span>
#include <string>
#include <vector>

namespace bose {

enum class MultiChoiceMethod { option_ppl, blank_ppl };

const char* to_string(MultiChoiceMethod method);
MultiChoiceMethod multichoice_method_from_string(const std::string& s);

/// Per-option continuation score.
struct ContinuationScore {
    int option_index = 0;
    std::vector<double> token_logprobs;
    double ppl = 0.0;
    std::size_t token_count = 0;
};

/// exp of the mean negative log-probability. Set unnormalized to score by
/// exp of the total instead (exposed as --unnormalized for comparison).
double perplexity(std::span<const double> token_logprobs, bool unnormalized = false);

ContinuationScore make_continuation_score(int option_index,
                                          std::vector<double> token_logprobs,
                                          bool unnormalized = false);

/// Index of the lowest perplexity; exact ties go to the lowest option index.
int choose_option(const std::vector<ContinuationScore>& scores);

struct MultiChoiceOptions {
    MultiChoiceMethod method = MultiChoiceMethod::blank_ppl;
    bool unnormalized = false;
    bool skip_errors = false;
};

/// Scores every sample of a multi-choice benchmark against the backend and
/// aggregates accuracy. Backend calls run with bounded parallelism; results
/// are order-restored, so output does not depend on scheduling.
RunRecord eval_multichoice(const Benchmark& bench, Backend& backend,
                           const MultiChoiceOptions& opts);

} // namespace bose
