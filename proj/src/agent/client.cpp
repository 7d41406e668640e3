#include "kgqa/agent/client.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

namespace kgqa::agent {

ScriptedClient::ScriptedClient(std::vector<std::string> messages)
    : messages_(std::move(messages)) {}

std::vector<std::string> ScriptedClient::messages_from_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TransportError("cannot open script file '" + path + "'");
    std::vector<std::string> messages;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_string()) {
            messages.push_back(j.get<std::string>());
        } else if (j.is_object() && j.contains("content") && j["content"].is_string()) {
            messages.push_back(j["content"].get<std::string>());
        } else {
            throw TransportError("script file '" + path + "' line " +
                                 std::to_string(lineno) +
                                 ": expected a JSON string or {\"content\": ...}");
        }
    }
    return messages;
}

ScriptedClient ScriptedClient::from_jsonl(const std::string& path) {
    return ScriptedClient(messages_from_jsonl(path));
}

std::string ScriptedClient::complete(const std::string&, const std::vector<ChatMessage>&,
                                     const nlohmann::json&, const DecodingOptions&) {
    std::lock_guard<std::mutex> lock(mu_);
    if (messages_.empty()) throw TransportError("scripted client has no messages");
    return messages_[next_++ % messages_.size()];
}

void ScriptedClient::rewind() {
    std::lock_guard<std::mutex> lock(mu_);
    next_ = 0;
}

size_t ScriptedClient::served() const {
    std::lock_guard<std::mutex> lock(mu_);
    return next_;
}

HttpChatClient::HttpChatClient(HttpClientConfig config) : config_(std::move(config)) {}

std::string HttpChatClient::complete(const std::string& system_prompt,
                                     const std::vector<ChatMessage>& history,
                                     const nlohmann::json& tools,
                                     const DecodingOptions& opts) {
    nlohmann::json body;
    body["model"] = config_.model;
    auto& messages = body["messages"] = nlohmann::json::array();
    messages.push_back({{"role", "system"}, {"content", system_prompt}});
    for (const auto& m : history)
        messages.push_back({{"role", m.role}, {"content", m.content}});
    if (tools.is_array() && !tools.empty()) body["tools"] = tools;
    body["temperature"] = opts.temperature;
    body["max_tokens"] = opts.max_tokens;
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
        httplib::Client http(config_.base_url);
        http.set_connection_timeout(config_.connect_timeout_s, 0);
        http.set_read_timeout(config_.read_timeout_s, 0);
        auto res = http.Post(config_.path, headers, payload, "application/json");
        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw TransportError("chat endpoint returned status " +
                                 std::to_string(res->status) + ": " + res->body);
        nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() ||
            j["choices"].empty() || !j["choices"][0].contains("message") ||
            !j["choices"][0]["message"].contains("content") ||
            !j["choices"][0]["message"]["content"].is_string())
            throw TransportError("malformed chat response: " + res->body);
        return j["choices"][0]["message"]["content"].get<std::string>();
    }
    throw TransportError("chat endpoint unreachable after " +
                         std::to_string(config_.max_retries + 1) + " attempts (" +
                         last_error + ")");
}

std::string RecordingClient::complete(const std::string& system_prompt,
                                      const std::vector<ChatMessage>& history,
                                      const nlohmann::json& tools,
                                      const DecodingOptions& opts) {
    std::string response = inner_.complete(system_prompt, history, tools, opts);
    std::lock_guard<std::mutex> lock(mu_);
    log_.push_back({system_prompt, history, response});
    return response;
}

std::vector<RecordingClient::Exchange> RecordingClient::exchanges() const {
    std::lock_guard<std::mutex> lock(mu_);
    return log_;
}

}  // namespace kgqa::agent
