#include "prompting.hpp"

#include "error.hpp"

namespace bose {

namespace {

constexpr const char* kStepCue = "let's think step by step. ";

std::string instruct_preamble(const Sample& sample, const PromptOptions& opts) {
    const std::string domain = sample.domain_tag.value_or(opts.default_domain);
    return "You're a " + domain +
           " expert. Given the following question, please reason step by step and put "
           "your final answer within boxed{}.";
}

void require_shot(const Sample& shot) {
    if (!shot.cot || shot.cot->empty()) {
        throw DataError("exemplar '" + shot.id + "' is missing a worked solution (cot)");
    }
    if (shot.answer.empty()) {
        throw DataError("exemplar '" + shot.id + "' is missing a gold answer");
    }
}

std::string solution_text(const Sample& shot, bool with_step_cue) {
    std::string s;
    if (with_step_cue) s += kStepCue;
    s += *shot.cot;
    s += " The final answer is \\boxed{" + shot.answer + "}";
    return s;
}

} // namespace

const char* to_string(TemplateKind kind) {
    switch (kind) {
        case TemplateKind::instruct_0shot: return "instruct_0shot";
        case TemplateKind::instruct_fewshot: return "instruct_fewshot";
        case TemplateKind::light_0shot: return "light_0shot";
        case TemplateKind::iclip: return "iclip";
    }
    return "?";
}

TemplateKind template_kind_from_string(const std::string& s) {
    if (s == "instruct_0shot" || s == "instruct0") return TemplateKind::instruct_0shot;
    if (s == "instruct_fewshot" || s == "instructfew") return TemplateKind::instruct_fewshot;
    if (s == "light_0shot" || s == "light0") return TemplateKind::light_0shot;
    if (s == "iclip") return TemplateKind::iclip;
    throw UsageError("unknown template kind '" + s +
                     "' (expected iclip, instruct0, instructfew or light0)");
}

GenerationPrompt render_generation(const Sample& sample, const std::vector<Sample>& shots,
                                   TemplateKind kind, const PromptOptions& opts) {
    if (sample.question.empty()) {
        throw DataError("sample '" + sample.id + "' has an empty question");
    }
    const bool zero_shot =
        kind == TemplateKind::instruct_0shot || kind == TemplateKind::light_0shot;
    if (zero_shot && !shots.empty()) {
        throw UsageError(std::string(to_string(kind)) + " takes no exemplars");
    }
    if (!zero_shot && shots.empty()) {
        throw UsageError(std::string(to_string(kind)) + " requires at least one exemplar");
    }
    for (const auto& shot : shots) require_shot(shot);

    GenerationPrompt prompt;
    prompt.template_kind = kind;
    std::string& text = prompt.text;

    switch (kind) {
        case TemplateKind::instruct_0shot:
            text = instruct_preamble(sample, opts) + "\n" + sample.question;
            break;
        case TemplateKind::instruct_fewshot: {
            text = instruct_preamble(sample, opts);
            for (const auto& shot : shots) {
                text += "\n" + shot.question + "\n" + solution_text(shot, false) + "\n";
            }
            text += "\n" + sample.question;
            break;
        }
        case TemplateKind::light_0shot:
        case TemplateKind::iclip: {
            for (const auto& shot : shots) {
                text += "Problem: " + shot.question + "\nSolution: " +
                        solution_text(shot, true) + "\n\n";
            }
            text += "Problem: " + sample.question + "\nSolution: ";
            if (opts.cot_cue_in_target) text += kStepCue;
            prompt.stop_sequences.push_back("Problem:");
            break;
        }
    }
    return prompt;
}

std::vector<ScoringPrompt> render_option_ppl(const Sample& sample) {
    if (sample.options.size() < 2) {
        throw DataError("sample '" + sample.id + "' needs at least 2 options for option-ppl");
    }
    if (sample.options.size() > 26) {
        throw DataError("sample '" + sample.id + "' has more than 26 options");
    }
    std::string context = "Question: " + sample.question + "\n";
    for (std::size_t i = 0; i < sample.options.size(); ++i) {
        context += static_cast<char>('A' + i);
        context += ". " + sample.options[i] + "\n";
    }
    context += "Answer: ";

    std::vector<ScoringPrompt> prompts;
    prompts.reserve(sample.options.size());
    for (std::size_t i = 0; i < sample.options.size(); ++i) {
        prompts.push_back({context, std::string(1, static_cast<char>('A' + i)),
                           static_cast<int>(i)});
    }
    return prompts;
}

std::vector<ScoringPrompt> render_blank_ppl(const Sample& sample) {
    if (sample.options.size() < 2) {
        throw DataError("sample '" + sample.id + "' needs at least 2 options for blank-ppl");
    }
    std::vector<ScoringPrompt> prompts;
    prompts.reserve(sample.options.size());
    for (std::size_t i = 0; i < sample.options.size(); ++i) {
        if (sample.options[i].empty()) {
            throw DataError("sample '" + sample.id + "': option " + std::to_string(i) +
                            " is empty");
        }
        prompts.push_back({sample.question, " " + sample.options[i], static_cast<int>(i)});
    }
    return prompts;
}

} // namespace bose
