#include "ppl_scoring.hpp"

#include "error.hpp"
#include "prompting.hpp"
#include "util.hpp"

#include <algorithm>
#include <cmath>

namespace bose {

const char* to_string(MultiChoiceMethod method) {
    return method == MultiChoiceMethod::option_ppl ? "option_ppl" : "blank_ppl";
}

MultiChoiceMethod multichoice_method_from_string(const std::string& s) {
    if (s == "option_ppl" || s == "option-ppl") return MultiChoiceMethod::option_ppl;
    if (s == "blank_ppl" || s == "blank-ppl") return MultiChoiceMethod::blank_ppl;
    throw UsageError("unknown multi-choice method '" + s +
                     "' (expected option-ppl or blank-ppl)");
}

double perplexity(std::span<const double> token_logprobs, bool unnormalized) {
    if (token_logprobs.empty()) {
        throw UsageError("perplexity requires at least one token logprob");
    }
    for (double lp : token_logprobs) {
        if (!std::isfinite(lp)) throw UsageError("non-finite token logprob");
    }
    // summing in sorted order makes the result independent of token order
    std::vector<double> sorted(token_logprobs.begin(), token_logprobs.end());
    std::sort(sorted.begin(), sorted.end());
    double total = 0.0;
    for (double lp : sorted) total += lp;
    const double nll = unnormalized
                           ? -total
                           : -total / static_cast<double>(token_logprobs.size());
    return std::exp(nll);
}

ContinuationScore make_continuation_score(int option_index,
                                          std::vector<double> token_logprobs,
                                          bool unnormalized) {
    ContinuationScore score;
    score.option_index = option_index;
    score.ppl = perplexity(token_logprobs, unnormalized);
    score.token_count = token_logprobs.size();
    score.token_logprobs = std::move(token_logprobs);
    return score;
}

int choose_option(const std::vector<ContinuationScore>& scores) {
    if (scores.size() < 2) {
        throw UsageError("choose_option requires at least 2 scored options");
    }
    std::vector<const ContinuationScore*> by_index(scores.size(), nullptr);
    for (const auto& s : scores) {
        if (s.option_index < 0 || s.option_index >= static_cast<int>(scores.size()) ||
            by_index[s.option_index] != nullptr) {
            throw UsageError("option indices must be distinct and contiguous from 0");
        }
        by_index[s.option_index] = &s;
    }
    // walk in option order so exact ties resolve to the lowest index
    int best = 0;
    for (int idx = 1; idx < static_cast<int>(by_index.size()); ++idx) {
        if (by_index[idx]->ppl < by_index[best]->ppl) best = idx;
    }
    return best;
}

RunRecord eval_multichoice(const Benchmark& bench, Backend& backend,
                           const MultiChoiceOptions& opts) {
    if (bench.task_kind != TaskKind::multi_choice) {
        throw UsageError("benchmark '" + bench.name + "' is not a multi-choice benchmark");
    }
    if (bench.samples.empty()) {
        throw DataError("benchmark '" + bench.name + "' has no samples");
    }
    backend.ensure_scoring_capability();

    RunRecord record;
    record.benchmark = bench.name;
    record.method = to_string(opts.method);
    record.skip_errors = opts.skip_errors;
    record.ppl_rows.resize(bench.samples.size());

    parallel_for_indexed(
        bench.samples.size(), backend.spec().max_inflight, [&](std::size_t i) {
            const Sample& sample = bench.samples[i];
            PplRow& row = record.ppl_rows[i];
            row.sample_id = sample.id;
            row.gold = sample.gold_index;

            const auto prompts = opts.method == MultiChoiceMethod::option_ppl
                                     ? render_option_ppl(sample)
                                     : render_blank_ppl(sample);
            try {
                std::vector<ContinuationScore> scores;
                scores.reserve(prompts.size());
                for (const auto& p : prompts) {
                    auto logprobs = backend.score_continuation(p.context, p.continuation);
                    scores.push_back(make_continuation_score(p.option_index,
                                                             std::move(logprobs),
                                                             opts.unnormalized));
                }
                for (const auto& s : scores) row.ppls.push_back(s.ppl);
                row.chosen = choose_option(scores);
                row.correct = row.chosen == row.gold;
            } catch (const BackendError& e) {
                row.errored = true;
                row.error = e.what();
            }
        });

    if (!opts.skip_errors) {
        for (const auto& row : record.ppl_rows) {
            if (row.errored) {
                throw BackendError("sample '" + row.sample_id + "': " + row.error);
            }
        }
    }
    const std::size_t scored = record.scored_count();
    if (scored == 0) throw DataError("no scorable samples (all errored)");
    record.accuracy =
        static_cast<double>(record.correct_count()) / static_cast<double>(scored);
    record.created_at_ms = now_epoch_ms();
    record.run_id = compute_run_id(record);
    return record;
}

} // namespace bose
