#pragma once

#include <memory>
#include <semaphore>
#include <string>

#include "reflectsql/types.hpp"

namespace reflectsql {

struct CompletionRequest {
    std::string prompt;
    std::string model = "gpt-3.5-turbo-instruct";
    double temperature = 0.7;
    int max_tokens = 256;
    double timeout_s = 30.0;
    int retries = 2;  // attempts after the first try
};

struct CompletionResult {
    std::string text;
    std::string backend;  // "live" or "mock"
    double latency_s = 0.0;
};

class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    // Throws BackendError on failure; never returns an empty-success.
    virtual CompletionResult complete(const CompletionRequest& req) = 0;
    virtual std::string name() const = 0;
};

// Deterministic alternative synthesis, a pure function of the prompt text.
// Recognizes the four generation prompt shapes; anything else is a
// BackendError. Every produced statement passes check_syntax.
std::string mock_generate(const std::string& prompt);

class MockBackend final : public CompletionBackend {
public:
    CompletionResult complete(const CompletionRequest& req) override;
    std::string name() const override { return "mock"; }
};

// OpenAI-compatible completions client: POST {base_url}/completions with
// {model, prompt, temperature, max_tokens}, reads choices[0].text.
// Transport failures and 5xx responses are retried with exponential
// backoff (0.5s, doubling, 20% jitter) up to the request's retry budget;
// other non-2xx responses fail immediately. At most max_in_flight requests
// run concurrently.
class HttpBackend final : public CompletionBackend {
public:
    HttpBackend(std::string base_url, std::string api_key, int max_in_flight = 4);
    CompletionResult complete(const CompletionRequest& req) override;
    std::string name() const override { return "live"; }

    // Serialized request payload; field set and ordering are stable.
    static std::string request_body(const CompletionRequest& req);

private:
    std::string base_url_;
    std::string api_key_;
    std::counting_semaphore<64> in_flight_;
};

}  // namespace reflectsql
