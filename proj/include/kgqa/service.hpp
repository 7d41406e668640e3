#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "kgqa/agent/episode.hpp"
#include "kgqa/config.hpp"

namespace kgqa {

// Raised by endpoint handlers on a bad request body; the HTTP layer answers
// 400 with {error, detail}.
struct BadRequest : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Loaded graph + retrieval index wired into a ToolEnv. Heap-bound because
// env points into the other members.
struct Harness {
    PropertyGraph graph;
    EmbeddingIndex index;
    Embedder embedder;
    agent::ToolEnv env;
};

// Embedder named by the config: the deterministic local one, or the HTTP
// embeddings endpoint it points at.
Embedder make_embedder(const HarnessConfig& config);

// Chat client the config describes.
agent::HttpClientConfig chat_client_config(const HarnessConfig& config);

std::unique_ptr<Harness> load_harness(const HarnessConfig& config, bool with_index = true);

// Endpoint logic as plain functions over JSON bodies, so in-process calls
// and HTTP responses are byte-identical by construction.
class Service {
public:
    explicit Service(const agent::ToolEnv& env);

    // {query, params?} -> {rows, row_count, failed:false}
    //                   | {failed:true, error} (query-level trouble, not 400)
    nlohmann::ordered_json query(const nlohmann::json& body) const;
    // {queries, topk?} -> {response, failed}
    nlohmann::ordered_json retrieve(const nlohmann::json& body) const;
    // {tool_call} -> {response, failed}; invalid calls come back as the
    // corrective payload an episode would record, not as an HTTP error.
    nlohmann::ordered_json tool(const nlohmann::json& body) const;
    // {trajectory, gold, clue_nodes, delta?} -> reward breakdown
    nlohmann::ordered_json reward(const nlohmann::json& body) const;
    nlohmann::ordered_json graph_stats() const;
    nlohmann::ordered_json healthz() const;

private:
    const agent::ToolEnv& env_;
};

// HTTP wrapper. start() binds (port 0 picks a free one), then serves on a
// background thread until stop().
class HttpService {
public:
    explicit HttpService(const agent::ToolEnv& env);
    ~HttpService();
    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    void start(const std::string& host, int port);
    int port() const;
    void stop();
    // Block until the server shuts down (for a foreground serve command).
    void wait();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace kgqa
