#pragma once

#include <optional>
#include <string>
#include <vector>

namespace bose {

enum class TaskKind { open_ended, multi_choice };

const char* to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& s);

/// One evaluation item. For multi-choice samples the gold answer is held
/// canonically as an option letter; gold_index is resolved at load time.
struct Sample {
    std::string id;
    std::string question;
    std::vector<std::string> options; // empty for open-ended items
    std::string answer;               // gold; canonical letter when options present
    std::optional<std::string> cot;   // worked solution, exemplar use
    std::optional<std::string> domain_tag;
    int gold_index = -1;              // resolved option index, -1 when no options

    bool operator==(const Sample&) const = default;
};

struct Benchmark {
    std::string name;
    TaskKind task_kind = TaskKind::open_ended;
    std::vector<Sample> samples;
    std::vector<Sample> exemplars;

    bool operator==(const Benchmark&) const = default;
};

/// Loads a line-delimited benchmark file and validates every invariant.
/// Throws DataError with the offending line number or sample id. Unknown
/// fields are rejected when strict is set, ignored otherwise.
Benchmark load_benchmark(const std::string& path, TaskKind kind, bool strict = false);

/// Parses benchmark content from a string (same format and checks);
/// `origin` names the source in error messages.
Benchmark parse_benchmark(const std::string& text, const std::string& name,
                          TaskKind kind, bool strict, const std::string& origin);

/// Serializes back to the line-delimited format. load -> serialize -> load
/// is the identity.
std::string serialize_benchmark(const Benchmark& bench);

/// First k exemplars in stored order. Throws UsageError when k exceeds the
/// exemplar count.
std::vector<Sample> select_fewshot(const Benchmark& bench, std::size_t k);

} // namespace bose
