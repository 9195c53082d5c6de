#include <doctest.h>

#include "test_util.hpp"

#include "core/dataset.hpp"
#include "core/error.hpp"
#include "core/prompting.hpp"

#include <algorithm>

using namespace bose;

namespace {

// the frozen golden fixture: target + two exemplars
Sample golden_target() {
    Sample s;
    s.id = "g1";
    s.question = "What is 5+7?";
    s.answer = "12";
    s.domain_tag = "math";
    return s;
}

std::vector<Sample> golden_shots() {
    Sample e1;
    e1.id = "e1";
    e1.question = "What is 2+2?";
    e1.cot = "2+2=4.";
    e1.answer = "4";
    Sample e2;
    e2.id = "e2";
    e2.question = "What is 3*3?";
    e2.cot = "3*3=9.";
    e2.answer = "9";
    return {e1, e2};
}

Sample golden_mc() {
    Sample s;
    s.id = "m1";
    s.question = "Which planet is known as the Red Planet?";
    s.options = {"Venus", "Mars", "Jupiter", "Saturn"};
    s.answer = "B";
    s.gold_index = 1;
    return s;
}

} // namespace

TEST_CASE("generation templates reproduce the golden files byte for byte") {
    const auto target = golden_target();
    const auto shots = golden_shots();

    CHECK(render_generation(target, shots, TemplateKind::iclip).text ==
          testutil::read_file(testutil::golden("iclip.txt")));
    CHECK(render_generation(target, {}, TemplateKind::light_0shot).text ==
          testutil::read_file(testutil::golden("light_0shot.txt")));
    CHECK(render_generation(target, {}, TemplateKind::instruct_0shot).text ==
          testutil::read_file(testutil::golden("instruct_0shot.txt")));
    CHECK(render_generation(target, shots, TemplateKind::instruct_fewshot).text ==
          testutil::read_file(testutil::golden("instruct_fewshot.txt")));
}

TEST_CASE("scoring prompts reproduce the golden files byte for byte") {
    const auto sample = golden_mc();
    const auto option = render_option_ppl(sample);
    CHECK(option[0].context + option[0].continuation ==
          testutil::read_file(testutil::golden("option_ppl.txt")));
    const auto blank = render_blank_ppl(sample);
    CHECK(blank[0].context + blank[0].continuation ==
          testutil::read_file(testutil::golden("blank_ppl.txt")));
}

TEST_CASE("rendering is a pure function of its inputs") {
    const auto target = golden_target();
    const auto shots = golden_shots();
    const auto a = render_generation(target, shots, TemplateKind::iclip);
    const auto b = render_generation(target, shots, TemplateKind::iclip);
    CHECK(a.text == b.text);
    CHECK(a.stop_sequences == b.stop_sequences);
}

TEST_CASE("stop lists follow the template family") {
    const auto target = golden_target();
    const auto shots = golden_shots();

    const auto iclip = render_generation(target, shots, TemplateKind::iclip);
    REQUIRE(iclip.stop_sequences.size() == 1);
    CHECK(iclip.stop_sequences[0] == "Problem:");
    const auto light = render_generation(target, {}, TemplateKind::light_0shot);
    CHECK(std::find(light.stop_sequences.begin(), light.stop_sequences.end(), "Problem:") !=
          light.stop_sequences.end());

    CHECK(render_generation(target, {}, TemplateKind::instruct_0shot).stop_sequences.empty());
    CHECK(render_generation(target, shots, TemplateKind::instruct_fewshot)
              .stop_sequences.empty());
}

TEST_CASE("light and iclip prompts end at the solution cue") {
    const auto target = golden_target();
    const auto shots = golden_shots();
    for (const auto& prompt : {render_generation(target, shots, TemplateKind::iclip),
                               render_generation(target, {}, TemplateKind::light_0shot)}) {
        const std::string& text = prompt.text;
        CHECK(text.find("Problem:") != std::string::npos);
        REQUIRE(text.size() >= 10);
        CHECK(text.substr(text.size() - 10) == "Solution: ");
        // the suffix cue is the final occurrence of "Solution:"
        CHECK(text.rfind("Solution:") == text.size() - 10);
    }
}

TEST_CASE("the step-by-step cue can be moved into the target block") {
    PromptOptions opts;
    opts.cot_cue_in_target = true;
    const auto prompt =
        render_generation(golden_target(), golden_shots(), TemplateKind::iclip, opts);
    const std::string suffix = "Solution: let's think step by step. ";
    REQUIRE(prompt.text.size() > suffix.size());
    CHECK(prompt.text.substr(prompt.text.size() - suffix.size()) == suffix);
}

TEST_CASE("the domain slot defaults to math") {
    Sample s = golden_target();
    s.domain_tag.reset();
    const auto prompt = render_generation(s, {}, TemplateKind::instruct_0shot);
    CHECK(prompt.text.rfind("You're a math expert.", 0) == 0);
    s.domain_tag = "history";
    CHECK(render_generation(s, {}, TemplateKind::instruct_0shot)
              .text.rfind("You're a history expert.", 0) == 0);
}

TEST_CASE("shot and template compatibility is enforced") {
    const auto target = golden_target();
    const auto shots = golden_shots();
    CHECK_THROWS_AS(render_generation(target, shots, TemplateKind::instruct_0shot),
                    UsageError);
    CHECK_THROWS_AS(render_generation(target, shots, TemplateKind::light_0shot), UsageError);
    CHECK_THROWS_AS(render_generation(target, {}, TemplateKind::iclip), UsageError);
    CHECK_THROWS_AS(render_generation(target, {}, TemplateKind::instruct_fewshot), UsageError);

    auto broken = shots;
    broken[1].cot.reset();
    CHECK_THROWS_AS(render_generation(target, broken, TemplateKind::iclip), DataError);
    broken = shots;
    broken[0].answer.clear();
    CHECK_THROWS_AS(render_generation(target, broken, TemplateKind::iclip), DataError);

    Sample empty_q = target;
    empty_q.question.clear();
    CHECK_THROWS_AS(render_generation(empty_q, {}, TemplateKind::light_0shot), DataError);
}

TEST_CASE("option-ppl shares one context and enumerates letters") {
    const auto sample = golden_mc();
    const auto prompts = render_option_ppl(sample);
    REQUIRE(prompts.size() == 4);
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        CHECK(prompts[i].context == prompts[0].context);
        CHECK(prompts[i].option_index == static_cast<int>(i));
    }
    CHECK(prompts[0].continuation == "A");
    CHECK(prompts[3].continuation == "D");
    CHECK(prompts[0].context.substr(prompts[0].context.size() - 8) == "Answer: ");

    Sample two = sample;
    two.options = {"x", "y"};
    two.answer = "A";
    two.gold_index = 0;
    const auto pair = render_option_ppl(two);
    CHECK(pair[0].continuation == "A");
    CHECK(pair[1].continuation == "B");

    Sample many = sample;
    many.options.assign(27, "o");
    CHECK_THROWS_AS(render_option_ppl(many), DataError);
}

TEST_CASE("blank-ppl omits every trace of option scaffolding") {
    const auto sample = golden_mc();
    const auto prompts = render_blank_ppl(sample);
    REQUIRE(prompts.size() == 4);
    CHECK(prompts[0].context == sample.question);
    CHECK(prompts[0].continuation == " Venus");
    CHECK(prompts[1].continuation == " Mars");
    for (const auto& p : prompts) {
        const std::string full = p.context + p.continuation;
        CHECK(full.find("A.") == std::string::npos);
        CHECK(full.find("Answer:") == std::string::npos);
    }
}

TEST_CASE("blank-ppl rejects empty options and keeps duplicate indices distinct") {
    Sample s = golden_mc();
    s.options = {"x", "", "y"};
    CHECK_THROWS_WITH_AS(render_blank_ppl(s), doctest::Contains("option 1"), DataError);

    s.options = {"x", "same", "same"};
    const auto prompts = render_blank_ppl(s);
    CHECK(prompts[1].continuation == prompts[2].continuation);
    CHECK(prompts[1].option_index == 1);
    CHECK(prompts[2].option_index == 2);
}
