#pragma once

#include "dataset.hpp"

#include <string>
#include <vector>

namespace bose {

enum class TemplateKind { instruct_0shot, instruct_fewshot, light_0shot, iclip };

const char* to_string(TemplateKind kind);
TemplateKind template_kind_from_string(const std::string& s);

/// A ready-to-send generation prompt. Light/ICLiP prompts always carry
/// "Problem:" in the stop list; instruct prompts carry none.
struct GenerationPrompt {
    std::string text;
    std::vector<std::string> stop_sequences;
    TemplateKind template_kind = TemplateKind::iclip;
};

/// One (context, continuation) pair; only continuation tokens are scored.
struct ScoringPrompt {
    std::string context;
    std::string continuation;
    int option_index = 0;
};

struct PromptOptions {
    /// When set, the target block's solution cue becomes
    /// "Solution: let's think step by step. " instead of the bare cue.
    bool cot_cue_in_target = false;
    /// Fills the "{domain}" slot of instruct templates when the sample
    /// carries no domain tag.
    std::string default_domain = "math";
};

/// Renders the generation templates byte-exactly. Exemplar blocks appear in
/// the order given, separated by one blank line; 0-shot kinds require an
/// empty shot list, few-shot kinds a nonempty one with cot and answer set.
GenerationPrompt render_generation(const Sample& sample, const std::vector<Sample>& shots,
                                   TemplateKind kind, const PromptOptions& opts = {});

/// Option-ppl scoring prompts: shared lettered context, one bare-letter
/// continuation per option.
std::vector<ScoringPrompt> render_option_ppl(const Sample& sample);

/// Blank-ppl scoring prompts: the bare question as context, " " + option
/// content as continuation, with the option list omitted entirely.
std::vector<ScoringPrompt> render_blank_ppl(const Sample& sample);

} // namespace bose
