#include "http_backend.hpp"

#include "error.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <thread>

using nlohmann::json;

namespace bose {

namespace {

struct ParsedUrl {
    std::string base; // scheme://host[:port]
    std::string path;
};

ParsedUrl parse_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw UsageError("endpoint URL must start with http:// or https://, got '" + url + "'");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    ParsedUrl out;
    if (path_start == std::string::npos) {
        out.base = url;
        out.path = "/v1/completions";
    } else {
        out.base = url.substr(0, path_start);
        out.path = url.substr(path_start);
    }
    return out;
}

} // namespace

struct HttpBackend::Response {
    json body;
};

HttpBackend::HttpBackend(BackendSpec spec)
    : spec_(std::move(spec)), gate_(spec_.max_inflight) {
    spec_.kind = BackendKind::http;
    spec_.validate();
    const ParsedUrl url = parse_url(spec_.endpoint);
    host_base_ = url.base;
    path_ = url.path;
}

HttpBackend::~HttpBackend() = default;

std::unique_ptr<httplib::Client> HttpBackend::lease_client() {
    {
        std::lock_guard lock(pool_mu_);
        if (!pool_.empty()) {
            auto client = std::move(pool_.back());
            pool_.pop_back();
            return client;
        }
    }
    auto client = std::make_unique<httplib::Client>(host_base_);
    const time_t sec = spec_.timeout_ms / 1000;
    const time_t usec = (spec_.timeout_ms % 1000) * 1000;
    client->set_connection_timeout(sec, usec);
    client->set_read_timeout(sec, usec);
    client->set_write_timeout(sec, usec);
    if (!spec_.bearer_token.empty()) {
        client->set_default_headers({{"Authorization", "Bearer " + spec_.bearer_token}});
    }
    return client;
}

void HttpBackend::return_client(std::unique_ptr<httplib::Client> client) {
    std::lock_guard lock(pool_mu_);
    pool_.push_back(std::move(client));
}

HttpBackend::Response HttpBackend::post_with_retries(const std::string& body,
                                                     const char* what) {
    InflightLease lease(gate_);
    std::string attempt_log;
    for (unsigned attempt = 0; attempt <= spec_.retries; ++attempt) {
        if (attempt > 0) {
            const auto backoff =
                std::chrono::milliseconds(spec_.backoff_ms) * (1u << (attempt - 1));
            std::this_thread::sleep_for(backoff);
        }
        auto client = lease_client();
        auto res = client->Post(path_, body, "application/json");
        const bool transport_ok = static_cast<bool>(res);
        if (transport_ok) return_client(std::move(client));

        if (!transport_ok) {
            attempt_log += "\n  attempt " + std::to_string(attempt + 1) + ": transport error (" +
                           httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status >= 500) {
            attempt_log += "\n  attempt " + std::to_string(attempt + 1) + ": HTTP " +
                           std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw BackendError(std::string(what) + ": HTTP " + std::to_string(res->status) +
                               " from " + host_base_ + path_);
        }
        try {
            return Response{json::parse(res->body)};
        } catch (const json::exception& e) {
            throw BackendError(std::string(what) + ": malformed response JSON: " + e.what());
        }
    }
    throw BackendError(std::string(what) + ": transport failed after " +
                       std::to_string(spec_.retries + 1) + " attempts:" + attempt_log);
}

namespace {

// Accepts both the flat shape and the {choices: [...]} wrapper.
json unwrap_choice(const json& body) {
    if (body.contains("choices") && body["choices"].is_array() && !body["choices"].empty()) {
        return body["choices"][0];
    }
    return body;
}

struct EchoedTokens {
    std::vector<TokenLogprob> tokens;
    std::vector<std::size_t> offsets; // empty when the server sent none
};

EchoedTokens parse_tokens(const json& choice, const char* what) {
    EchoedTokens out;
    bool all_offsets = true;
    if (choice.contains("tokens") && choice["tokens"].is_array()) {
        for (const json& t : choice["tokens"]) {
            if (!t.contains("text") || !t.contains("logprob")) {
                throw BackendError(std::string(what) + ": token entry missing text/logprob");
            }
            double lp = 0.0;
            if (!t["logprob"].is_null()) lp = t["logprob"].get<double>();
            out.tokens.push_back({t["text"].get<std::string>(), lp});
            if (t.contains("offset") && t["offset"].is_number()) {
                out.offsets.push_back(t["offset"].get<std::size_t>());
            } else {
                all_offsets = false;
            }
        }
    } else if (choice.contains("logprobs") && choice["logprobs"].is_object()) {
        const json& lp = choice["logprobs"];
        if (lp.contains("tokens") && lp.contains("token_logprobs")) {
            const auto& texts = lp["tokens"];
            const auto& probs = lp["token_logprobs"];
            for (std::size_t i = 0; i < texts.size(); ++i) {
                const double v = (i < probs.size() && !probs[i].is_null())
                                     ? probs[i].get<double>()
                                     : 0.0;
                out.tokens.push_back({texts[i].get<std::string>(), v});
            }
            if (lp.contains("text_offset") && lp["text_offset"].is_array() &&
                lp["text_offset"].size() == out.tokens.size()) {
                for (const json& o : lp["text_offset"]) {
                    out.offsets.push_back(o.get<std::size_t>());
                }
            } else {
                all_offsets = false;
            }
        }
    }
    if (!all_offsets || out.offsets.size() != out.tokens.size()) out.offsets.clear();
    return out;
}

} // namespace

Completion HttpBackend::complete(const std::string& prompt_text, const GenConfig& cfg) {
    if (prompt_text.empty()) throw UsageError("empty prompt");
    json req = {
        {"model", spec_.model_id},
        {"prompt", prompt_text},
        {"max_tokens", cfg.max_new_tokens},
        {"temperature", cfg.temperature},
        {"stop", cfg.stop_sequences},
        {"logprobs", false},
        {"echo", false},
    };
    const Response res = post_with_retries(req.dump(), "complete");
    const json choice = unwrap_choice(res.body);
    if (!choice.contains("text") || !choice["text"].is_string()) {
        throw BackendError("complete: response carries no text field");
    }

    Completion out;
    out.text = choice["text"].get<std::string>();
    const std::string reason = choice.value("finish_reason", "length");
    out.finish_reason = reason == "stop" ? FinishReason::stop : FinishReason::length;

    // servers are not trusted to honor the stop list
    auto [trimmed, hit] = trim_at_stop(out.text, cfg.stop_sequences);
    if (hit) {
        out.text = std::move(trimmed);
        out.finish_reason = FinishReason::stop;
    }
    auto echoed = parse_tokens(choice, "complete");
    if (!echoed.tokens.empty()) out.tokens = std::move(echoed.tokens);
    return out;
}

std::vector<double> HttpBackend::score_continuation(const std::string& context,
                                                    const std::string& continuation) {
    if (context.empty() || continuation.empty()) {
        throw UsageError("score_continuation requires nonempty context and continuation");
    }
    json req = {
        {"model", spec_.model_id},
        {"prompt", context + continuation},
        {"max_tokens", 0},
        {"temperature", 0.0},
        {"stop", json::array()},
        {"logprobs", true},
        {"echo", true},
    };
    const Response res = post_with_retries(req.dump(), "score_continuation");
    const json choice = unwrap_choice(res.body);
    const auto echoed = parse_tokens(choice, "score_continuation");
    if (echoed.tokens.empty()) {
        throw BackendError("score_continuation: server returned no token logprobs");
    }
    std::vector<double> logprobs;
    if (!echoed.offsets.empty()) {
        // the server's own offsets are authoritative; token texts need not
        // concatenate back to the prompt byte-for-byte
        for (std::size_t i = 0; i < echoed.tokens.size(); ++i) {
            const auto& tok = echoed.tokens[i];
            if (!tok.text.empty() &&
                echoed.offsets[i] + tok.text.size() > context.size()) {
                logprobs.push_back(tok.logprob);
            }
        }
    } else {
        logprobs = continuation_logprobs(echoed.tokens, context.size());
    }
    if (logprobs.empty()) {
        throw BackendError("score_continuation: echo covers no continuation tokens");
    }
    return logprobs;
}

void HttpBackend::ensure_scoring_capability() {
    if (scoring_checked_) return;
    // one tiny echo probe up front instead of failing per-call mid-run
    try {
        score_continuation("capability probe:", " ok");
    } catch (const BackendError& e) {
        throw BackendError(std::string("backend at ") + spec_.endpoint +
                           " cannot score continuations: " + e.what());
    }
    scoring_checked_ = true;
}

} // namespace bose
