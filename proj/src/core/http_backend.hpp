#pragma once

#include "backend.hpp"

#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace httplib {
class Client;
}

namespace bose {

/// JSON-over-HTTP completion client. POSTs
///   {model, prompt, max_tokens, temperature, stop, logprobs, echo}
/// and reads {text, finish_reason, tokens: [{text, logprob, offset}]};
/// the OpenAI-style {choices: [...]} wrapper is unwrapped when present.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(BackendSpec spec);
    ~HttpBackend() override;

    const BackendSpec& spec() const override { return spec_; }
    Completion complete(const std::string& prompt_text, const GenConfig& cfg) override;
    std::vector<double> score_continuation(const std::string& context,
                                           const std::string& continuation) override;
    void ensure_scoring_capability() override;

private:
    struct Response;

    Response post_with_retries(const std::string& body, const char* what);
    std::unique_ptr<httplib::Client> lease_client();
    void return_client(std::unique_ptr<httplib::Client> client);

    BackendSpec spec_;
    std::string host_base_;  // scheme://host[:port]
    std::string path_;       // endpoint path
    InflightGate gate_;
    std::mutex pool_mu_;
    std::vector<std::unique_ptr<httplib::Client>> pool_;
    bool scoring_checked_ = false;
};

} // namespace bose
