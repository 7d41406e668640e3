#pragma once

#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace kgqa::agent {

struct ChatMessage {
    std::string role;  // "user" or "assistant"
    std::string content;
};

struct DecodingOptions {
    double temperature = 0.7;
    int max_tokens = 4096;
};

// Raised when the chat backend stays unreachable after retries; an episode
// hitting this aborts with a partial trajectory.
struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The policy contract: one assistant message per call.
class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string complete(const std::string& system_prompt,
                                 const std::vector<ChatMessage>& history,
                                 const nlohmann::json& tools,
                                 const DecodingOptions& opts) = 0;
};

// Deterministic replay of a fixed message list, wrapping around at the end.
class ScriptedClient : public ChatClient {
public:
    explicit ScriptedClient(std::vector<std::string> messages);

    // One message per line: either a bare JSON string or {"content": "..."}.
    static ScriptedClient from_jsonl(const std::string& path);
    static std::vector<std::string> messages_from_jsonl(const std::string& path);

    std::string complete(const std::string& system_prompt,
                         const std::vector<ChatMessage>& history,
                         const nlohmann::json& tools,
                         const DecodingOptions& opts) override;

    void rewind();
    size_t served() const;

private:
    std::vector<std::string> messages_;
    size_t next_ = 0;
    mutable std::mutex mu_;
};

struct HttpClientConfig {
    std::string base_url = "http://127.0.0.1:8000";
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string api_key_env;  // name of the env var holding the key, not the key
    int max_retries = 3;
    int connect_timeout_s = 10;
    int read_timeout_s = 120;
};

// Chat-completions client. Connection failures and 429/5xx responses are
// retried up to max_retries with linear backoff, then raise TransportError.
class HttpChatClient : public ChatClient {
public:
    explicit HttpChatClient(HttpClientConfig config);

    std::string complete(const std::string& system_prompt,
                         const std::vector<ChatMessage>& history,
                         const nlohmann::json& tools,
                         const DecodingOptions& opts) override;

private:
    HttpClientConfig config_;
};

// Wraps another client and logs every exchange.
class RecordingClient : public ChatClient {
public:
    struct Exchange {
        std::string system_prompt;
        std::vector<ChatMessage> history;
        std::string response;
    };

    explicit RecordingClient(ChatClient& inner) : inner_(inner) {}

    std::string complete(const std::string& system_prompt,
                         const std::vector<ChatMessage>& history,
                         const nlohmann::json& tools,
                         const DecodingOptions& opts) override;

    std::vector<Exchange> exchanges() const;

private:
    ChatClient& inner_;
    std::vector<Exchange> log_;
    mutable std::mutex mu_;
};

}  // namespace kgqa::agent
