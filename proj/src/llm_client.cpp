#include "httplib.h"

#include "bwsq/llm_client.hpp"

#include <cstdlib>
#include <regex>
#include <thread>

#include "json.hpp"

#include "bwsq/error.hpp"

namespace bwsq {

using nlohmann::json;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // without trailing slash
};

ParsedUrl parse_url(const std::string& url) {
    static const std::regex pattern(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, pattern)) throw InvalidArgument("unsupported base_url '" + url + "'");
    ParsedUrl parsed{m[1].str(), m[2].matched ? m[2].str() : ""};
    while (!parsed.path.empty() && parsed.path.back() == '/') parsed.path.pop_back();
    return parsed;
}

}  // namespace

LlmEndpointConfig LlmEndpointConfig::from_environment() {
    LlmEndpointConfig c;
    c.api_key = env_or("BWSQ_API_KEY", c.api_key);
    c.base_url = env_or("BWSQ_BASE_URL", c.base_url);
    c.model_name = env_or("BWSQ_MODEL", c.model_name);
    return c;
}

void LlmEndpointConfig::validate() const {
    if (parallelism < 1) throw InvalidArgument("parallelism must be >= 1");
    if (max_retries < 0) throw InvalidArgument("max_retries must be >= 0");
    if (model_name.empty()) throw InvalidArgument("model name is empty (set --model or BWSQ_MODEL)");
    parse_url(base_url);
}

struct HttpChatClient::Impl {
    LlmEndpointConfig config;
    ParsedUrl url;
};

HttpChatClient::HttpChatClient(LlmEndpointConfig config) : impl_(std::make_unique<Impl>()) {
    impl_->url = parse_url(config.base_url);
    impl_->config = std::move(config);
}

HttpChatClient::~HttpChatClient() = default;

std::string HttpChatClient::request_body(const LlmEndpointConfig& config, const ChatPrompt& prompt) {
    json body = {{"model", config.model_name},
                 {"messages",
                  json::array({{{"role", "system"}, {"content", prompt.system}},
                               {{"role", "user"}, {"content", prompt.user}}})},
                 {"temperature", config.temperature}};
    return body.dump();
}

std::string HttpChatClient::extract_content(const std::string& body) {
    const auto parsed = json::parse(body, nullptr, false);
    if (parsed.is_discarded()) throw EndpointError("response is not JSON", 200);
    try {
        const auto& content = parsed.at("choices").at(0).at("message").at("content");
        return content.is_null() ? std::string() : content.get<std::string>();
    } catch (const json::exception& e) {
        throw EndpointError(std::string("unexpected response shape: ") + e.what(), 200);
    }
}

std::string HttpChatClient::complete(const ChatPrompt& prompt) {
    const auto& cfg = impl_->config;
    // httplib clients are not shareable across threads; one per call.
    httplib::Client client(impl_->url.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout);
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    client.set_write_timeout(secs);

    httplib::Headers headers;
    if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

    auto res = client.Post(impl_->url.path + "/chat/completions", headers, request_body(cfg, prompt),
                           "application/json");
    if (!res) throw EndpointError("request failed: " + httplib::to_string(res.error()), 0);
    if (res->status < 200 || res->status >= 300) {
        throw EndpointError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200), res->status);
    }
    return extract_content(res->body);
}

RateLimiter::RateLimiter(double per_minute, double burst)
    : rate_per_second_(per_minute / 60.0), capacity_(std::max(1.0, burst)), tokens_(capacity_), last_(Clock::now()) {}

void RateLimiter::acquire() {
    if (rate_per_second_ <= 0.0) return;
    std::unique_lock lock(mutex_);
    for (;;) {
        const auto now = Clock::now();
        const double elapsed = std::chrono::duration<double>(now - last_).count();
        tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_second_);
        last_ = now;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        const double wait = (1.0 - tokens_) / rate_per_second_;
        // Sleeping under the lock queues callers in arrival order.
        std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    }
}

}  // namespace bwsq
