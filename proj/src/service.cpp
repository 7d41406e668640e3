#include "kgqa/service.hpp"

#include <cstdlib>
#include <functional>
#include <thread>

#include <httplib.h>

#include "kgqa/gql/parser.hpp"
#include "kgqa/gql/render.hpp"
#include "kgqa/retriever.hpp"
#include "kgqa/reward.hpp"

namespace kgqa {

Embedder make_embedder(const HarnessConfig& config) {
    if (config.embedder == "test") return test_embedder();
    HarnessConfig cfg = config;
    return [cfg](const std::vector<std::string>& texts) {
        httplib::Client client(cfg.embedder_endpoint);
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(60, 0);
        httplib::Headers headers;
        if (!cfg.api_key_env.empty()) {
            const char* key = std::getenv(cfg.api_key_env.c_str());
            if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);
        }
        nlohmann::ordered_json request;
        request["model"] = cfg.embedder_model;
        request["input"] = texts;
        auto res = client.Post(cfg.embedder_path, headers, request.dump(), "application/json");
        if (!res) throw RetrieverError("embedding endpoint unreachable");
        if (res->status != 200)
            throw RetrieverError("embedding endpoint returned status " +
                                 std::to_string(res->status));
        auto j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.contains("data") || !j["data"].is_array())
            throw RetrieverError("embedding endpoint returned an unexpected body");
        std::vector<std::vector<double>> out;
        for (const auto& item : j["data"]) {
            if (!item.contains("embedding"))
                throw RetrieverError("embedding endpoint returned an unexpected body");
            out.push_back(item.at("embedding").get<std::vector<double>>());
        }
        if (out.size() != texts.size())
            throw RetrieverError("embedding endpoint returned the wrong number of vectors");
        return out;
    };
}

agent::HttpClientConfig chat_client_config(const HarnessConfig& config) {
    agent::HttpClientConfig cc;
    if (!config.chat_endpoint.empty()) cc.base_url = config.chat_endpoint;
    if (!config.chat_path.empty()) cc.path = config.chat_path;
    cc.model = config.chat_model;
    cc.api_key_env = config.api_key_env;
    return cc;
}

std::unique_ptr<Harness> load_harness(const HarnessConfig& config, bool with_index) {
    validate_config(config);
    if (config.nodes_path.empty() || config.edges_path.empty())
        throw ConfigError("config needs both 'nodes' and 'edges' graph file paths");
    auto h = std::make_unique<Harness>();
    h->graph = PropertyGraph::load(config.nodes_path, config.edges_path);
    if (!config.domain_label.empty()) h->graph.set_domain_label(config.domain_label);
    h->embedder = make_embedder(config);
    if (with_index) h->index = build_index(h->graph, h->embedder);
    h->env.graph = &h->graph;
    h->env.index = with_index ? &h->index : nullptr;
    h->env.embedder = h->embedder;
    h->env.response_cap = config.response_cap;
    return h;
}

namespace {

void require_keys(const nlohmann::json& body, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : body.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (key == k) known = true;
        if (!known) throw BadRequest("unexpected key '" + key + "'");
    }
}

}  // namespace

Service::Service(const agent::ToolEnv& env) : env_(env) {
    if (!env.graph) throw std::invalid_argument("service environment has no graph");
}

nlohmann::ordered_json Service::query(const nlohmann::json& body) const {
    require_keys(body, {"query", "params"});
    if (!body.contains("query") || !body.at("query").is_string())
        throw BadRequest("body needs a string 'query'");
    gql::Params params;
    if (body.contains("params")) {
        if (!body.at("params").is_object()) throw BadRequest("'params' must be an object");
        for (const auto& [key, value] : body.at("params").items()) {
            try {
                params[key] = value_from_json(value);
            } catch (const std::exception&) {
                throw BadRequest("'params' values must be scalars");
            }
        }
    }
    nlohmann::ordered_json out;
    try {
        auto ast = gql::parse(body.at("query").get<std::string>());
        auto table = gql::execute(ast, *env_.graph, params);
        out["rows"] = gql::render_rows(table, env_.response_cap);
        out["row_count"] = table.rows.size();
        out["failed"] = false;
    } catch (const gql::ParseError& e) {
        out["failed"] = true;
        out["error"] = std::string("cypher parse error: ") + e.what();
    } catch (const gql::UnsupportedError& e) {
        out["failed"] = true;
        out["error"] = e.what();
    } catch (const gql::EvalError& e) {
        out["failed"] = true;
        out["error"] = std::string("cypher error: ") + e.what();
    }
    return out;
}

nlohmann::ordered_json Service::retrieve(const nlohmann::json& body) const {
    require_keys(body, {"queries", "topk"});
    if (!body.contains("queries") || !body.at("queries").is_array())
        throw BadRequest("body needs an array 'queries'");
    for (const auto& q : body.at("queries"))
        if (!q.is_string()) throw BadRequest("'queries' must be an array of strings");
    agent::ToolCall call;
    call.name = "node_id_retriever";
    call.arguments["queries"] = body.at("queries");
    if (body.contains("topk")) {
        const auto& topk = body.at("topk");
        if (!topk.is_number_integer() || topk.get<int64_t>() < 1)
            throw BadRequest("'topk' must be a positive integer");
        call.arguments["topk"] = topk;
    }
    auto result = agent::execute_tool(call, env_);
    nlohmann::ordered_json out;
    out["response"] = result.text;
    out["failed"] = result.failed;
    return out;
}

nlohmann::ordered_json Service::tool(const nlohmann::json& body) const {
    require_keys(body, {"tool_call"});
    if (!body.contains("tool_call") || !body.at("tool_call").is_object())
        throw BadRequest("body needs an object 'tool_call'");
    auto parsed = agent::parse_tool_call("<tool_call>\n" + body.at("tool_call").dump() +
                                         "\n</tool_call>");
    nlohmann::ordered_json out;
    if (parsed.status == agent::ToolCallParse::Status::ok) {
        auto result = agent::execute_tool(parsed.call, env_);
        out["response"] = result.text;
        out["failed"] = result.failed;
    } else {
        out["response"] = "Error: malformed tool call: " + parsed.error + ". " +
                          agent::call_format_reminder();
        out["failed"] = true;
    }
    return out;
}

nlohmann::ordered_json Service::reward(const nlohmann::json& body) const {
    require_keys(body, {"trajectory", "gold", "clue_nodes", "delta"});
    if (!body.contains("trajectory")) throw BadRequest("body needs 'trajectory'");
    if (!body.contains("gold") || !body.at("gold").is_string())
        throw BadRequest("body needs a string 'gold'");
    if (!body.contains("clue_nodes") || !body.at("clue_nodes").is_array())
        throw BadRequest("body needs an array 'clue_nodes'");
    std::vector<std::string> clues;
    for (const auto& c : body.at("clue_nodes")) {
        if (!c.is_string()) throw BadRequest("'clue_nodes' must be an array of strings");
        clues.push_back(c.get<std::string>());
    }
    double delta = kDefaultDelta;
    if (body.contains("delta")) {
        if (!body.at("delta").is_number()) throw BadRequest("'delta' must be a number");
        delta = body.at("delta").get<double>();
    }
    agent::Trajectory trajectory;
    try {
        trajectory = agent::trajectory_from_json(body.at("trajectory"));
    } catch (const std::exception& e) {
        throw BadRequest(std::string("bad trajectory: ") + e.what());
    }
    try {
        return breakdown_to_json(
            combined_reward(trajectory, body.at("gold").get<std::string>(), clues,
                            *env_.graph, delta));
    } catch (const RewardError& e) {
        throw BadRequest(e.what());
    } catch (const std::invalid_argument& e) {
        throw BadRequest(e.what());
    }
}

nlohmann::ordered_json Service::graph_stats() const {
    auto stats = env_.graph->stats();
    nlohmann::ordered_json out;
    out["node_count"] = stats.node_count;
    out["edge_count"] = stats.edge_count;
    out["nodes_per_type"] = stats.nodes_per_type;
    out["edges_per_type"] = stats.edges_per_type;
    out["domain_label"] = env_.graph->domain_label();
    return out;
}

nlohmann::ordered_json Service::healthz() const { return {{"status", "ok"}}; }

struct HttpService::Impl {
    Service service;
    httplib::Server server;
    std::thread thread;
    int port = 0;

    explicit Impl(const agent::ToolEnv& env) : service(env) {}
};

namespace {

nlohmann::json parse_body(const httplib::Request& req) {
    auto j = nlohmann::json::parse(req.body, nullptr, false);
    if (j.is_discarded()) throw BadRequest("request body is not valid JSON");
    if (!j.is_object()) throw BadRequest("request body must be a JSON object");
    return j;
}

using Handler = std::function<nlohmann::ordered_json(const httplib::Request&)>;

httplib::Server::Handler wrap(Handler fn) {
    return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
        try {
            res.status = 200;
            res.set_content(fn(req).dump(), "application/json");
        } catch (const BadRequest& e) {
            res.status = 400;
            res.set_content(
                nlohmann::ordered_json{{"error", "bad request"}, {"detail", e.what()}}.dump(),
                "application/json");
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(
                nlohmann::ordered_json{{"error", "internal error"}, {"detail", e.what()}}.dump(),
                "application/json");
        }
    };
}

}  // namespace

HttpService::HttpService(const agent::ToolEnv& env) : impl_(std::make_unique<Impl>(env)) {}

HttpService::~HttpService() { stop(); }

void HttpService::start(const std::string& host, int port) {
    auto* impl = impl_.get();
    impl->server.Post("/query",
                      wrap([impl](const httplib::Request& req) {
                          return impl->service.query(parse_body(req));
                      }));
    impl->server.Post("/retrieve",
                      wrap([impl](const httplib::Request& req) {
                          return impl->service.retrieve(parse_body(req));
                      }));
    impl->server.Post("/tool", wrap([impl](const httplib::Request& req) {
                          return impl->service.tool(parse_body(req));
                      }));
    impl->server.Post("/reward",
                      wrap([impl](const httplib::Request& req) {
                          return impl->service.reward(parse_body(req));
                      }));
    impl->server.Get("/graph/stats",
                     wrap([impl](const httplib::Request&) { return impl->service.graph_stats(); }));
    impl->server.Get("/healthz",
                     wrap([impl](const httplib::Request&) { return impl->service.healthz(); }));

    if (port == 0) {
        impl->port = impl->server.bind_to_any_port(host);
        if (impl->port < 0) throw std::runtime_error("cannot bind service socket");
    } else {
        if (!impl->server.bind_to_port(host, port))
            throw std::runtime_error("cannot bind service to port " + std::to_string(port));
        impl->port = port;
    }
    impl->thread = std::thread([impl] { impl->server.listen_after_bind(); });
    impl->server.wait_until_ready();
}

int HttpService::port() const { return impl_->port; }

void HttpService::stop() {
    if (impl_->thread.joinable()) {
        impl_->server.stop();
        impl_->thread.join();
    }
}

void HttpService::wait() {
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace kgqa
