#pragma once

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bose {

enum class BackendKind { http, mock };

struct BackendSpec {
    BackendKind kind = BackendKind::mock;
    std::string endpoint;       // http only; full URL of the completion endpoint
    std::string model_id;
    unsigned timeout_ms = 30000;
    unsigned retries = 2;       // transport retries on top of the first attempt
    unsigned max_inflight = 4;
    unsigned backoff_ms = 100;  // doubled per retry
    std::string bearer_token;   // sent as Authorization: Bearer when nonempty

    void validate() const;
};

/// Decoding settings; the default profile is greedy.
struct GenConfig {
    unsigned max_new_tokens = 1024;
    double temperature = 0.0;
    std::vector<std::string> stop_sequences;
};

enum class FinishReason { stop, length, error };

struct TokenLogprob {
    std::string text;
    double logprob = 0.0;
};

struct Completion {
    std::string text;
    FinishReason finish_reason = FinishReason::length;
    std::optional<std::vector<TokenLogprob>> tokens;
};

/// Cuts `text` at the earliest occurrence of any stop sequence. Returns the
/// prefix and whether a stop was hit; the prefix can contain no stop string.
std::pair<std::string, bool> trim_at_stop(const std::string& text,
                                          const std::vector<std::string>& stops);

/// Counting gate that also records the high-water mark, so tests can check
/// the max_inflight contract.
class InflightGate {
public:
    explicit InflightGate(unsigned limit) : limit_(limit == 0 ? 1 : limit) {}

    void acquire();
    void release();
    unsigned max_observed() const { return max_observed_.load(); }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    unsigned limit_;
    unsigned active_ = 0;
    std::atomic<unsigned> max_observed_{0};
};

struct InflightLease {
    explicit InflightLease(InflightGate& gate) : gate_(gate) { gate_.acquire(); }
    ~InflightLease() { gate_.release(); }
    InflightLease(const InflightLease&) = delete;
    InflightLease& operator=(const InflightLease&) = delete;

private:
    InflightGate& gate_;
};

/// Uniform inference surface: text completion with stop sequences plus
/// continuation logprob scoring. Implementations are safe to share across
/// worker threads; max_inflight is enforced internally.
class Backend {
public:
    virtual ~Backend() = default;

    virtual const BackendSpec& spec() const = 0;

    /// Single logical completion; retried internally on transport failure.
    /// Stop sequences are both forwarded and re-enforced client-side, so the
    /// returned text never contains one.
    virtual Completion complete(const std::string& prompt_text, const GenConfig& cfg) = 0;

    /// Natural-log probabilities of exactly the tokens realizing
    /// `continuation` after `context`. A token straddling the boundary is
    /// attributed to the continuation.
    virtual std::vector<double> score_continuation(const std::string& context,
                                                   const std::string& continuation) = 0;

    /// Checked once per run before scoring; throws BackendError when the
    /// server cannot report logprobs.
    virtual void ensure_scoring_capability() = 0;
};

/// Splits an echoed token stream at the context/continuation boundary and
/// keeps the continuation side. `tokens` carry (text, logprob) in prompt
/// order; offsets are reconstructed cumulatively from `full_prompt`.
std::vector<double> continuation_logprobs(const std::vector<TokenLogprob>& tokens,
                                          std::size_t context_len);

} // namespace bose
