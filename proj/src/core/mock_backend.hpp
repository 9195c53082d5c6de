#pragma once

#include "backend.hpp"

#include <memory>
#include <string>
#include <vector>

namespace bose {

/// Table-driven deterministic backend. Rules are tried in order; the first
/// matcher that accepts the prompt wins.
struct MockRule {
    enum class Match { exact, prefix, hash };
    Match match = Match::exact;
    std::string value;                       // prompt, prefix, or fnv1a64 hex
    std::string text;                        // completion payload
    bool has_text = false;
    std::vector<TokenLogprob> tokens;        // echo payload for scoring
    bool has_tokens = false;
};

class MockBackend : public Backend {
public:
    MockBackend(BackendSpec spec, std::vector<MockRule> rules, unsigned delay_ms = 0);

    /// Loads a script file: a JSON list of {match: {kind, value},
    /// response: {text | tokens}} entries.
    static std::unique_ptr<MockBackend> from_file(const std::string& path, BackendSpec spec);

    const BackendSpec& spec() const override { return spec_; }
    Completion complete(const std::string& prompt_text, const GenConfig& cfg) override;
    std::vector<double> score_continuation(const std::string& context,
                                           const std::string& continuation) override;
    void ensure_scoring_capability() override {}

    /// High-water mark of concurrent requests, for the max_inflight probe.
    unsigned max_inflight_observed() const { return gate_.max_observed(); }

private:
    const MockRule& find_rule(const std::string& prompt) const;

    BackendSpec spec_;
    std::vector<MockRule> rules_;
    unsigned delay_ms_;
    InflightGate gate_;
};

} // namespace bose
