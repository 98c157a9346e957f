#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>

#include "bwsq/prompts.hpp"

namespace bwsq {

struct LlmEndpointConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string model_name;
    std::string api_key;  // normally from BWSQ_API_KEY
    double temperature = 0.0;
    int max_retries = 3;
    int parallelism = 1;
    double requests_per_minute = 0.0;  // 0 disables client-side limiting
    std::chrono::milliseconds timeout{60000};
    // First retry delay after a transport error; doubles per attempt.
    std::chrono::milliseconds retry_backoff{1000};

    // Fills unset fields from BWSQ_API_KEY, BWSQ_BASE_URL and BWSQ_MODEL.
    static LlmEndpointConfig from_environment();

    // Throws InvalidArgument when parallelism < 1, max_retries < 0 or the
    // model name is empty.
    void validate() const;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;

    // Returns the assistant message content. Throws EndpointError on
    // transport failures, non-2xx statuses and malformed bodies.
    virtual std::string complete(const ChatPrompt& prompt) = 0;
};

// POST {base_url}/chat/completions with {model, messages, temperature} and a
// bearer token. Safe to call from several threads.
class HttpChatClient final : public ChatClient {
public:
    explicit HttpChatClient(LlmEndpointConfig config);
    ~HttpChatClient() override;

    std::string complete(const ChatPrompt& prompt) override;

    // Request body as sent on the wire.
    static std::string request_body(const LlmEndpointConfig& config, const ChatPrompt& prompt);
    // Pulls choices[0].message.content out of a response body.
    static std::string extract_content(const std::string& body);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Token bucket: `per_minute` tokens per minute, burst of at most `burst`.
class RateLimiter {
public:
    RateLimiter(double per_minute, double burst = 1.0);

    // Blocks until a token is available. No-op when per_minute <= 0.
    void acquire();

private:
    using Clock = std::chrono::steady_clock;

    double rate_per_second_;
    double capacity_;
    double tokens_;
    Clock::time_point last_;
    std::mutex mutex_;
};

}  // namespace bwsq
