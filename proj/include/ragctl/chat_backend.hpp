#pragma once

// Remote generator speaking the chat-completions wire format, with bounded
// retries and exponential backoff on transport failures.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ragctl/error.hpp"
#include "ragctl/generator.hpp"

namespace ragctl {

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{8000};

    std::chrono::milliseconds delay_before(int attempt) const {
        // attempt is 1-based; no delay before the first one
        if (attempt <= 1) return std::chrono::milliseconds{0};
        double d = static_cast<double>(initial_backoff.count());
        for (int i = 2; i < attempt; ++i) d *= multiplier;
        return std::min(max_backoff, std::chrono::milliseconds{static_cast<std::int64_t>(d)});
    }
};

struct ChatBackendConfig {
    std::string endpoint = "http://127.0.0.1:8000";
    std::string path = "/v1/chat/completions";
    std::string model = "default";
    double temperature = 0.0;
    int max_tokens = 256;
    std::string api_key_env = "RAGCTL_API_KEY";
    std::optional<std::uint64_t> seed;
    /// Declare the control tokens as stop sequences. Off by default: a stop on
    /// [RETRIEVE] would cut the query that must follow it.
    bool send_stop_sequences = false;
    std::chrono::seconds timeout{60};
    RetryPolicy retry;
};

struct TransportResponse {
    bool delivered = false;  // false on connection-level failure
    int status = 0;
    std::string body;
    std::string error;
};

using Transport = std::function<TransportResponse(const std::string& body)>;
using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// POSTs JSON bodies to cfg.endpoint + cfg.path. Reads the bearer token from
/// the environment variable named by cfg.api_key_env on every call.
inline Transport http_transport(const ChatBackendConfig& cfg) {
    return [cfg](const std::string& body) {
        httplib::Client client(cfg.endpoint);
        client.set_connection_timeout(cfg.timeout);
        client.set_read_timeout(cfg.timeout);
        client.set_write_timeout(cfg.timeout);
        httplib::Headers headers;
        if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
        TransportResponse out;
        auto res = client.Post(cfg.path, headers, body, "application/json");
        if (!res) {
            out.error = httplib::to_string(res.error());
            return out;
        }
        out.delivered = true;
        out.status = res->status;
        out.body = res->body;
        return out;
    };
}

class ChatBackend final : public Generator {
public:
    explicit ChatBackend(ChatBackendConfig cfg)
        : ChatBackend(cfg, http_transport(cfg), [](std::chrono::milliseconds d) {
              std::this_thread::sleep_for(d);
          }) {}

    ChatBackend(ChatBackendConfig cfg, Transport transport, Sleeper sleeper)
        : cfg_(std::move(cfg)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {}

    GeneratorEmission emit_turn(const GenerationContext& ctx) override {
        const auto messages = to_chat_messages(ctx);
        auto [content, finish] = request(messages);
        if (finish == "length") return {std::move(content), StopReason::LengthLimit};
        auto cut = cut_after_first_branch(content);
        if (!cut.dropped.empty()) return {std::move(cut.kept), StopReason::ControlBoundary};
        return {std::move(content), StopReason::EndOfTurn};
    }

    std::string complete(std::span<const ChatMessage> messages) override {
        return request(messages).first;
    }

    nlohmann::json request_body(std::span<const ChatMessage> messages) const {
        nlohmann::json body;
        body["model"] = cfg_.model;
        body["temperature"] = cfg_.temperature;
        body["max_tokens"] = cfg_.max_tokens;
        if (cfg_.seed) body["seed"] = *cfg_.seed;
        auto& msgs = body["messages"] = nlohmann::json::array();
        for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
        if (cfg_.send_stop_sequences) {
            auto& stop = body["stop"] = nlohmann::json::array();
            for (auto t : kAllControlTokens) stop.push_back(std::string(surface(t)));
        }
        return body;
    }

    const ChatBackendConfig& config() const { return cfg_; }

private:
    static bool retryable_status(int status) { return status == 429 || status >= 500; }

    std::pair<std::string, std::string> request(std::span<const ChatMessage> messages) {
        const std::string body = request_body(messages).dump();
        std::string last_error;
        const int attempts = std::max(1, cfg_.retry.max_attempts);
        for (int attempt = 1; attempt <= attempts; ++attempt) {
            if (auto d = cfg_.retry.delay_before(attempt); d.count() > 0) sleeper_(d);
            TransportResponse res = transport_(body);
            if (!res.delivered) {
                last_error = "transport: " + res.error;
                continue;
            }
            if (retryable_status(res.status)) {
                last_error = "HTTP " + std::to_string(res.status);
                continue;
            }
            if (res.status < 200 || res.status >= 300) {
                throw Error(ErrorCode::BackendRejected,
                            "HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 200));
            }
            return parse_response(res.body);
        }
        throw Error(ErrorCode::BackendUnavailable,
                    last_error + " after " + std::to_string(attempts) + " attempts");
    }

    static std::pair<std::string, std::string> parse_response(const std::string& body) {
        auto json = nlohmann::json::parse(body, nullptr, false);
        if (json.is_discarded()) throw Error(ErrorCode::BackendRejected, "response is not JSON");
        try {
            const auto& choice = json.at("choices").at(0);
            std::string content = choice.at("message").value("content", std::string{});
            std::string finish;
            if (auto it = choice.find("finish_reason"); it != choice.end() && it->is_string()) {
                finish = it->get<std::string>();
            }
            return {std::move(content), std::move(finish)};
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::BackendRejected, std::string("malformed response: ") + e.what());
        }
    }

    ChatBackendConfig cfg_;
    Transport transport_;
    Sleeper sleeper_;
};

}  // namespace ragctl
