#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace kgqa {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Everything the CLI and service need to stand up an environment. Secrets
// never live here: api_key_env names the environment variable holding the
// key, and the key itself is read only when a request is sent.
struct HarnessConfig {
    std::string nodes_path;
    std::string edges_path;
    std::string domain_label;

    std::string embedder = "test";  // "test" | "http"
    std::string embedder_endpoint;  // http embedder only
    std::string embedder_path = "/v1/embeddings";
    std::string embedder_model;

    std::string chat_endpoint;
    std::string chat_path = "/v1/chat/completions";
    std::string chat_model;
    std::string api_key_env;

    int tool_budget = 10;
    size_t response_cap = 4096;
    double delta = 0.4;
    size_t group_size = 8;
    size_t concurrency = 1;
    uint64_t seed = 0;
};

// Rejects unknown keys, wrong types, and out-of-range values.
HarnessConfig config_from_json(const nlohmann::json& j);
HarnessConfig load_config(const std::string& path);
nlohmann::ordered_json config_to_json(const HarnessConfig& config);
void validate_config(const HarnessConfig& config);

}  // namespace kgqa
