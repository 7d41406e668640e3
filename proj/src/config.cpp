#include "kgqa/config.hpp"

#include <fstream>
#include <set>

namespace kgqa {

namespace {

const std::set<std::string> kKnownKeys = {
    "nodes",         "edges",         "domain_label",   "embedder",
    "embedder_endpoint", "embedder_path", "embedder_model",
    "chat_endpoint", "chat_path",     "chat_model",     "api_key_env",
    "tool_budget",   "response_cap",  "delta",          "group_size",
    "concurrency",   "seed"};

template <typename T>
void take(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

}  // namespace

void validate_config(const HarnessConfig& c) {
    if (c.embedder != "test" && c.embedder != "http")
        throw ConfigError("config key 'embedder' must be \"test\" or \"http\"");
    if (c.embedder == "http" && c.embedder_endpoint.empty())
        throw ConfigError("http embedder needs 'embedder_endpoint'");
    if (c.tool_budget < 1) throw ConfigError("'tool_budget' must be at least 1");
    if (c.response_cap < 64) throw ConfigError("'response_cap' must be at least 64");
    if (!(c.delta > 0.0) || c.delta > 1.0) throw ConfigError("'delta' must be in (0, 1]");
    if (c.group_size < 1) throw ConfigError("'group_size' must be at least 1");
    if (c.concurrency < 1) throw ConfigError("'concurrency' must be at least 1");
}

HarnessConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!kKnownKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");

    HarnessConfig c;
    take(j, "nodes", c.nodes_path);
    take(j, "edges", c.edges_path);
    take(j, "domain_label", c.domain_label);
    take(j, "embedder", c.embedder);
    take(j, "embedder_endpoint", c.embedder_endpoint);
    take(j, "embedder_path", c.embedder_path);
    take(j, "embedder_model", c.embedder_model);
    take(j, "chat_endpoint", c.chat_endpoint);
    take(j, "chat_path", c.chat_path);
    take(j, "chat_model", c.chat_model);
    take(j, "api_key_env", c.api_key_env);
    take(j, "tool_budget", c.tool_budget);
    take(j, "response_cap", c.response_cap);
    take(j, "delta", c.delta);
    take(j, "group_size", c.group_size);
    take(j, "concurrency", c.concurrency);
    take(j, "seed", c.seed);
    validate_config(c);
    return c;
}

HarnessConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw ConfigError("cannot open config file: " + path);
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + path);
    return config_from_json(j);
}

nlohmann::ordered_json config_to_json(const HarnessConfig& c) {
    nlohmann::ordered_json j;
    j["nodes"] = c.nodes_path;
    j["edges"] = c.edges_path;
    j["domain_label"] = c.domain_label;
    j["embedder"] = c.embedder;
    j["embedder_endpoint"] = c.embedder_endpoint;
    j["embedder_path"] = c.embedder_path;
    j["embedder_model"] = c.embedder_model;
    j["chat_endpoint"] = c.chat_endpoint;
    j["chat_path"] = c.chat_path;
    j["chat_model"] = c.chat_model;
    j["api_key_env"] = c.api_key_env;
    j["tool_budget"] = c.tool_budget;
    j["response_cap"] = c.response_cap;
    j["delta"] = c.delta;
    j["group_size"] = c.group_size;
    j["concurrency"] = c.concurrency;
    j["seed"] = c.seed;
    return j;
}

}  // namespace kgqa
