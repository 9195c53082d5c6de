#include "backend.hpp"

#include "error.hpp"

#include <algorithm>

namespace bose {

void BackendSpec::validate() const {
    if (retries > 5) {
        throw UsageError("retries must be at most 5, got " + std::to_string(retries));
    }
    if (max_inflight < 1) {
        throw UsageError("max_inflight must be at least 1");
    }
    if (kind == BackendKind::http && endpoint.empty()) {
        throw UsageError("http backend requires an endpoint URL");
    }
}

std::pair<std::string, bool> trim_at_stop(const std::string& text,
                                          const std::vector<std::string>& stops) {
    std::size_t cut = std::string::npos;
    for (const auto& stop : stops) {
        if (stop.empty()) continue;
        const std::size_t pos = text.find(stop);
        if (pos != std::string::npos) cut = std::min(cut, pos);
    }
    if (cut == std::string::npos) return {text, false};
    return {text.substr(0, cut), true};
}

void InflightGate::acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [this] { return active_ < limit_; });
    ++active_;
    unsigned seen = max_observed_.load();
    while (seen < active_ && !max_observed_.compare_exchange_weak(seen, active_)) {
    }
}

void InflightGate::release() {
    {
        std::lock_guard lock(mu_);
        --active_;
    }
    cv_.notify_one();
}

std::vector<double> continuation_logprobs(const std::vector<TokenLogprob>& tokens,
                                          std::size_t context_len) {
    std::vector<double> out;
    std::size_t offset = 0;
    for (const auto& tok : tokens) {
        const std::size_t end = offset + tok.text.size();
        // a token extending past the boundary belongs to the continuation,
        // including the straddling one
        if (!tok.text.empty() && end > context_len) out.push_back(tok.logprob);
        offset = end;
    }
    return out;
}

} // namespace bose
