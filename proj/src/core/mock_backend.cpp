#include "mock_backend.hpp"

#include "error.hpp"
#include "util.hpp"

#include <json.hpp>

#include <chrono>
#include <fstream>
#include <thread>

using nlohmann::json;

namespace bose {

MockBackend::MockBackend(BackendSpec spec, std::vector<MockRule> rules, unsigned delay_ms)
    : spec_(std::move(spec)), rules_(std::move(rules)), delay_ms_(delay_ms),
      gate_(spec_.max_inflight) {
    spec_.kind = BackendKind::mock;
    spec_.validate();
}

std::unique_ptr<MockBackend> MockBackend::from_file(const std::string& path,
                                                    BackendSpec spec) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open mock script '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("mock script '" + path + "': " + e.what());
    }
    if (!doc.is_array()) throw DataError("mock script '" + path + "' must be a JSON list");

    std::vector<MockRule> rules;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const json& entry = doc[i];
        const auto where = "mock script '" + path + "' rule " + std::to_string(i);
        if (!entry.is_object() || !entry.contains("match") || !entry.contains("response")) {
            throw DataError(where + ": expected {match, response}");
        }
        MockRule rule;
        const json& match = entry["match"];
        const std::string kind = match.value("kind", "");
        if (kind == "exact") {
            rule.match = MockRule::Match::exact;
        } else if (kind == "prefix") {
            rule.match = MockRule::Match::prefix;
        } else if (kind == "hash") {
            rule.match = MockRule::Match::hash;
        } else {
            throw DataError(where + ": match.kind must be exact, prefix or hash");
        }
        if (!match.contains("value") || !match["value"].is_string()) {
            throw DataError(where + ": match.value must be a string");
        }
        rule.value = match["value"].get<std::string>();

        const json& resp = entry["response"];
        if (resp.contains("text")) {
            rule.text = resp["text"].get<std::string>();
            rule.has_text = true;
        }
        if (resp.contains("tokens")) {
            for (const json& t : resp["tokens"]) {
                rule.tokens.push_back(
                    {t.at("text").get<std::string>(), t.at("logprob").get<double>()});
            }
            rule.has_tokens = true;
        }
        if (!rule.has_text && !rule.has_tokens) {
            throw DataError(where + ": response needs text or tokens");
        }
        rules.push_back(std::move(rule));
    }
    return std::make_unique<MockBackend>(std::move(spec), std::move(rules));
}

const MockRule& MockBackend::find_rule(const std::string& prompt) const {
    for (const auto& rule : rules_) {
        switch (rule.match) {
            case MockRule::Match::exact:
                if (prompt == rule.value) return rule;
                break;
            case MockRule::Match::prefix:
                if (prompt.rfind(rule.value, 0) == 0) return rule;
                break;
            case MockRule::Match::hash:
                if (fnv1a64_hex(prompt) == rule.value) return rule;
                break;
        }
    }
    throw BackendError("mock backend: no rule matches prompt (first 80 bytes: '" +
                       prompt.substr(0, 80) + "')");
}

Completion MockBackend::complete(const std::string& prompt_text, const GenConfig& cfg) {
    if (prompt_text.empty()) throw UsageError("empty prompt");
    InflightLease lease(gate_);
    if (delay_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));

    const MockRule& rule = find_rule(prompt_text);
    if (!rule.has_text) {
        throw BackendError("mock backend: matched rule has no completion text");
    }
    auto [trimmed, hit] = trim_at_stop(rule.text, cfg.stop_sequences);
    Completion c;
    c.text = std::move(trimmed);
    c.finish_reason = hit ? FinishReason::stop : FinishReason::length;
    return c;
}

std::vector<double> MockBackend::score_continuation(const std::string& context,
                                                    const std::string& continuation) {
    if (context.empty() || continuation.empty()) {
        throw UsageError("score_continuation requires nonempty context and continuation");
    }
    InflightLease lease(gate_);
    if (delay_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));

    const std::string full = context + continuation;
    const MockRule& rule = find_rule(full);
    if (!rule.has_tokens) {
        throw BackendError("mock backend: matched rule has no token scores");
    }
    // the scripted echo must reconstruct the prompt, or offsets are fiction
    std::string joined;
    for (const auto& t : rule.tokens) joined += t.text;
    if (joined != full) {
        throw DataError("mock backend: rule tokens do not reconstruct the prompt");
    }
    auto logprobs = continuation_logprobs(rule.tokens, context.size());
    if (logprobs.empty()) {
        throw BackendError("mock backend: no continuation tokens in scripted echo");
    }
    return logprobs;
}

} // namespace bose
