#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest/doctest.h>

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "kgqa/config.hpp"
#include "kgqa/reward.hpp"
#include "kgqa/service.hpp"

using namespace kgqa;
using namespace kgqa::agent;

namespace {

PropertyGraph fixture() {
    auto g = PropertyGraph::load(KGQA_FIXTURE_DIR "/mini_hetionet.nodes.jsonl",
                                 KGQA_FIXTURE_DIR "/mini_hetionet.edges.jsonl");
    g.set_domain_label("biomedical");
    return g;
}

struct FixtureEnv {
    PropertyGraph graph = fixture();
    EmbeddingIndex index = build_index(graph, test_embedder());
    ToolEnv env;
    FixtureEnv() {
        env.graph = &graph;
        env.index = &index;
        env.embedder = test_embedder();
    }
};

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

nlohmann::json fixture_config_json() {
    return {{"nodes", KGQA_FIXTURE_DIR "/mini_hetionet.nodes.jsonl"},
            {"edges", KGQA_FIXTURE_DIR "/mini_hetionet.edges.jsonl"},
            {"domain_label", "biomedical"},
            {"tool_budget", 10},
            {"delta", 0.4},
            {"group_size", 2},
            {"seed", 7}};
}

Trajectory answer_only_trajectory(const std::string& question, const std::string& text) {
    Trajectory t;
    t.question = question;
    t.steps.push_back({StepRole::observation, question, std::nullopt, std::nullopt, 0, false});
    t.steps.push_back({StepRole::action, text, std::nullopt, std::nullopt,
                       whitespace_tokens(text), false});
    t.final_answer = extract_answer(text);
    return t;
}

}  // namespace

TEST_CASE("config parsing validates keys, types, and ranges") {
    SUBCASE("complete config round-trips") {
        auto cfg = config_from_json(fixture_config_json());
        CHECK(cfg.nodes_path == KGQA_FIXTURE_DIR "/mini_hetionet.nodes.jsonl");
        CHECK(cfg.domain_label == "biomedical");
        CHECK(cfg.tool_budget == 10);
        CHECK(cfg.delta == 0.4);
        CHECK(cfg.group_size == 2);
        CHECK(cfg.seed == 7);
        CHECK(cfg.embedder == "test");
        CHECK(cfg.chat_path == "/v1/chat/completions");
        auto again = config_from_json(config_to_json(cfg));
        CHECK(config_to_json(again).dump() == config_to_json(cfg).dump());
    }
    SUBCASE("defaults match the training setup") {
        HarnessConfig cfg;
        CHECK(cfg.tool_budget == 10);
        CHECK(cfg.delta == 0.4);
        CHECK(cfg.group_size == 8);
        CHECK(cfg.response_cap == 4096);
        CHECK(cfg.embedder == "test");
    }
    SUBCASE("unknown and mistyped keys are rejected") {
        auto j = fixture_config_json();
        j["budgett"] = 3;
        CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("unknown config key"),
                             ConfigError);
        auto wrong = fixture_config_json();
        wrong["tool_budget"] = "ten";
        CHECK_THROWS_WITH_AS(config_from_json(wrong), doctest::Contains("wrong type"),
                             ConfigError);
    }
    SUBCASE("range violations are rejected") {
        auto check_bad = [](const char* key, nlohmann::json value, const char* needle) {
            auto j = fixture_config_json();
            j[key] = std::move(value);
            CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains(needle), ConfigError);
        };
        check_bad("delta", 0.0, "delta");
        check_bad("delta", 1.5, "delta");
        check_bad("tool_budget", 0, "tool_budget");
        check_bad("group_size", 0, "group_size");
        check_bad("concurrency", 0, "concurrency");
        check_bad("response_cap", 8, "response_cap");
        check_bad("embedder", "bogus", "embedder");
        auto j = fixture_config_json();
        j["embedder"] = "http";
        CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("embedder_endpoint"),
                             ConfigError);
        CHECK(config_from_json(fixture_config_json()).delta == 0.4);
    }
    SUBCASE("config files") {
        CHECK_THROWS_AS(load_config("no_such_config.json"), ConfigError);
        const std::string path = "service_config_test.json";
        {
            std::ofstream out(path);
            out << "{not json";
        }
        CHECK_THROWS_WITH_AS(load_config(path), doctest::Contains("not valid JSON"),
                             ConfigError);
        {
            std::ofstream out(path);
            out << fixture_config_json().dump();
        }
        CHECK(load_config(path).seed == 7);
        std::remove(path.c_str());
    }
}

TEST_CASE("load_harness wires the environment from config") {
    auto cfg = config_from_json(fixture_config_json());
    SUBCASE("with index") {
        auto h = load_harness(cfg);
        REQUIRE(h->env.graph != nullptr);
        REQUIRE(h->env.index != nullptr);
        CHECK(h->env.graph->stats().node_count == 7);
        CHECK(h->env.index->entries.size() == 7);
        CHECK(h->env.response_cap == 4096);
        CHECK(h->graph.domain_label() == "biomedical");
    }
    SUBCASE("without index") {
        auto h = load_harness(cfg, false);
        CHECK(h->env.index == nullptr);
    }
    SUBCASE("missing paths and bad files") {
        HarnessConfig empty;
        CHECK_THROWS_AS(load_harness(empty), ConfigError);
        auto bad = cfg;
        bad.nodes_path = "no_such_nodes.jsonl";
        CHECK_THROWS_AS(load_harness(bad), GraphError);
    }
    SUBCASE("chat client config mapping") {
        auto cc_defaults = chat_client_config(cfg);
        CHECK(cc_defaults.base_url == "http://127.0.0.1:8000");
        CHECK(cc_defaults.path == "/v1/chat/completions");
        auto with_chat = cfg;
        with_chat.chat_endpoint = "http://10.0.0.5:9000";
        with_chat.chat_model = "solver-7b";
        with_chat.api_key_env = "MY_KEY_VAR";
        auto cc = chat_client_config(with_chat);
        CHECK(cc.base_url == "http://10.0.0.5:9000");
        CHECK(cc.model == "solver-7b");
        CHECK(cc.api_key_env == "MY_KEY_VAR");
    }
}

TEST_CASE("service query endpoint mirrors the query engine") {
    FixtureEnv f;
    Service service(f.env);

    SUBCASE("rows, row count, and params") {
        auto out = service.query({{"query", "MATCH (n) RETURN count(*)"}});
        CHECK(out.at("rows") == "[{'count(*)': 7}]");
        CHECK(out.at("row_count") == 1);
        CHECK(out.at("failed") == false);

        auto rows = service.query(
            {{"query", "MATCH (g:Gene) WHERE g.entrez = $e RETURN g.name AS n"},
             {"params", {{"e", 351}}}});
        CHECK(rows.at("rows") == "[{'n': 'APP'}]");
    }
    SUBCASE("query-level failures are payload, not HTTP errors") {
        auto parse = service.query({{"query", "MATCH (n RETURN x"}});
        CHECK(parse.at("failed") == true);
        CHECK(contains(parse.at("error").get<std::string>(), "cypher parse error"));

        auto unsupported = service.query({{"query", "CREATE (n:Gene) RETURN n"}});
        CHECK(unsupported.at("failed") == true);
        CHECK(contains(unsupported.at("error").get<std::string>(), "unsupported construct"));

        auto eval = service.query(
            {{"query", "MATCH (g:Gene) WHERE g.entrez = $missing RETURN g.name"}});
        CHECK(eval.at("failed") == true);
        CHECK(contains(eval.at("error").get<std::string>(), "cypher error"));
    }
    SUBCASE("malformed bodies raise BadRequest") {
        CHECK_THROWS_AS(service.query(nlohmann::json::object()), BadRequest);
        CHECK_THROWS_AS(service.query({{"query", 3}}), BadRequest);
        CHECK_THROWS_AS(service.query({{"query", "MATCH (n) RETURN n"}, {"params", 3}}),
                        BadRequest);
        CHECK_THROWS_AS(service.query({{"query", "MATCH (n) RETURN n"},
                                       {"params", {{"x", {{"nested", 1}}}}}}),
                        BadRequest);
        CHECK_THROWS_WITH_AS(service.query({{"query", "MATCH (n) RETURN n"}, {"extra", 1}}),
                             doctest::Contains("unexpected key 'extra'"), BadRequest);
    }
}

TEST_CASE("service retrieve and tool endpoints match in-process execution") {
    FixtureEnv f;
    Service service(f.env);

    SUBCASE("retrieve equals execute_tool byte for byte") {
        ToolCall call;
        call.name = "node_id_retriever";
        call.arguments["queries"] = {"synapse", "amyloid precursor"};
        auto direct = execute_tool(call, f.env);
        auto out = service.retrieve({{"queries", {"synapse", "amyloid precursor"}}});
        CHECK(out.at("response").get<std::string>() == direct.text);
        CHECK(out.at("failed") == false);
        CHECK(contains(out.at("response").get<std::string>(), "'topk': 2"));

        auto one = service.retrieve({{"queries", {"synapse"}}, {"topk", 1}});
        CHECK(contains(one.at("response").get<std::string>(), "'topk': 1"));
    }
    SUBCASE("retrieve body validation") {
        CHECK_THROWS_AS(service.retrieve(nlohmann::json::object()), BadRequest);
        CHECK_THROWS_AS(service.retrieve({{"queries", "synapse"}}), BadRequest);
        CHECK_THROWS_AS(service.retrieve({{"queries", {1, 2}}}), BadRequest);
        CHECK_THROWS_AS(service.retrieve({{"queries", {"x"}}, {"topk", 0}}), BadRequest);
        CHECK_THROWS_AS(service.retrieve({{"queries", {"x"}}, {"topk", "two"}}), BadRequest);
    }
    SUBCASE("tool endpoint executes well-formed calls") {
        nlohmann::json tc = {
            {"name", "code_interpreter"},
            {"arguments",
             {{"code", "print(cypher(\"MATCH (n:Gene) RETURN count(*) AS c\"))"}}}};
        ToolCall call;
        call.name = "code_interpreter";
        call.arguments = tc["arguments"];
        auto direct = execute_tool(call, f.env);
        auto out = service.tool({{"tool_call", tc}});
        CHECK(out.at("response").get<std::string>() == direct.text);
        CHECK(out.at("response") == "[{'c': 3}]");
        CHECK(out.at("failed") == false);
    }
    SUBCASE("tool failures stay failure-as-payload") {
        auto failed = service.tool(
            {{"tool_call",
              {{"name", "code_interpreter"}, {"arguments", {{"code", "print(nope)"}}}}}});
        CHECK(failed.at("failed") == true);
        CHECK(contains(failed.at("response").get<std::string>(), "undefined variable"));

        auto unknown = service.tool(
            {{"tool_call", {{"name", "shell"}, {"arguments", {{"code", "ls"}}}}}});
        CHECK(unknown.at("failed") == true);
        CHECK(contains(unknown.at("response").get<std::string>(),
                       "Error: malformed tool call: unknown tool 'shell'"));
        CHECK(contains(unknown.at("response").get<std::string>(), call_format_reminder()));
    }
    SUBCASE("tool body validation") {
        CHECK_THROWS_AS(service.tool(nlohmann::json::object()), BadRequest);
        CHECK_THROWS_AS(service.tool({{"tool_call", "shell"}}), BadRequest);
        CHECK_THROWS_WITH_AS(service.tool({{"tool_call", nlohmann::json::object()},
                                           {"other", 1}}),
                             doctest::Contains("unexpected key 'other'"), BadRequest);
    }
}

TEST_CASE("service reward endpoint returns the full breakdown") {
    FixtureEnv f;
    Service service(f.env);
    auto traj = answer_only_trajectory("Which compartment?",
                                       "It is DOID:10652 related.\n\\answer{neuron projection}");
    nlohmann::json body = {{"trajectory", trajectory_to_json(traj)},
                           {"gold", "neuron projection"},
                           {"clue_nodes", {"DOID:10652", "GO:0045202"}}};

    SUBCASE("matches combined_reward exactly") {
        auto expected = breakdown_to_json(combined_reward(
            traj, "neuron projection", {"DOID:10652", "GO:0045202"}, f.graph));
        auto out = service.reward(body);
        CHECK(out.dump() == expected.dump());
        CHECK(out.at("r_ans") == 1.0);
        CHECK(out.at("r_clue") == 0.5);
        CHECK(out.at("r_final") == 1.0);
        CHECK(out.at("delta") == 0.4);
    }
    SUBCASE("wrapper-less trajectory earns zero") {
        auto gated = answer_only_trajectory("q?", "no wrapper here");
        auto out = service.reward({{"trajectory", trajectory_to_json(gated)},
                                   {"gold", "x"},
                                   {"clue_nodes", {"DOID:10652"}}});
        CHECK(out.at("gated") == true);
        CHECK(out.at("r_final") == 0.0);
    }
    SUBCASE("delta override") {
        auto with_delta = body;
        with_delta["delta"] = 0.9;
        CHECK(service.reward(with_delta).at("delta") == 0.9);
    }
    SUBCASE("bad bodies raise BadRequest") {
        auto no_gold = body;
        no_gold.erase("gold");
        CHECK_THROWS_AS(service.reward(no_gold), BadRequest);

        auto bad_clues = body;
        bad_clues["clue_nodes"] = {1, 2};
        CHECK_THROWS_AS(service.reward(bad_clues), BadRequest);

        auto unknown_clue = body;
        unknown_clue["clue_nodes"] = {"NOPE:1"};
        CHECK_THROWS_WITH_AS(service.reward(unknown_clue), doctest::Contains("NOPE:1"),
                             BadRequest);

        auto bad_delta = body;
        bad_delta["delta"] = 1.5;
        CHECK_THROWS_AS(service.reward(bad_delta), BadRequest);

        auto bad_traj = body;
        bad_traj["trajectory"] = "not a trajectory";
        CHECK_THROWS_AS(service.reward(bad_traj), BadRequest);
    }
}

TEST_CASE("service stats and health endpoints") {
    FixtureEnv f;
    Service service(f.env);
    auto stats = service.graph_stats();
    CHECK(stats.at("node_count") == 7);
    CHECK(stats.at("edge_count") == 7);
    CHECK(stats.at("nodes_per_type").at("Gene") == 3);
    CHECK(stats.at("edges_per_type").at("DISEASE_DOWNREGULATES_GENE") == 3);
    CHECK(stats.at("domain_label") == "biomedical");
    CHECK(service.healthz().dump() == R"({"status":"ok"})");

    ToolEnv no_graph;
    CHECK_THROWS_AS(Service{no_graph}, std::invalid_argument);
}

TEST_CASE("http service responses are byte-identical to in-process calls") {
    FixtureEnv f;
    Service service(f.env);
    HttpService http(f.env);
    http.start("127.0.0.1", 0);
    REQUIRE(http.port() > 0);
    httplib::Client client("127.0.0.1", http.port());

    SUBCASE("healthz") {
        auto res = client.Get("/healthz");
        REQUIRE(res);
        CHECK(res->status == 200);
        CHECK(res->body == R"({"status":"ok"})");
        CHECK(res->get_header_value("Content-Type") == "application/json");
    }
    SUBCASE("query, retrieve, tool, reward, stats parity") {
        nlohmann::json query_body = {{"query", "MATCH (n:Gene) RETURN n.name ORDER BY n.name"}};
        auto query_res = client.Post("/query", query_body.dump(), "application/json");
        REQUIRE(query_res);
        CHECK(query_res->status == 200);
        CHECK(query_res->body == service.query(query_body).dump());

        nlohmann::json retrieve_body = {{"queries", {"aphasia"}}};
        auto retrieve_res = client.Post("/retrieve", retrieve_body.dump(), "application/json");
        REQUIRE(retrieve_res);
        CHECK(retrieve_res->body == service.retrieve(retrieve_body).dump());
        CHECK(contains(retrieve_res->body, "'topk': 2"));

        nlohmann::json tool_body = {
            {"tool_call",
             {{"name", "code_interpreter"},
              {"arguments", {{"code", "print(cypher(\"MATCH (n) RETURN count(*) AS c\"))"}}}}}};
        auto tool_res = client.Post("/tool", tool_body.dump(), "application/json");
        REQUIRE(tool_res);
        CHECK(tool_res->body == service.tool(tool_body).dump());

        auto traj = answer_only_trajectory("q?", "plain text, no wrapper");
        nlohmann::json reward_body = {{"trajectory", trajectory_to_json(traj)},
                                      {"gold", "x"},
                                      {"clue_nodes", {"DOID:10652"}}};
        auto reward_res = client.Post("/reward", reward_body.dump(), "application/json");
        REQUIRE(reward_res);
        CHECK(reward_res->status == 200);
        CHECK(reward_res->body == service.reward(reward_body).dump());
        CHECK(contains(reward_res->body, "\"r_final\":0.0"));

        auto stats_res = client.Get("/graph/stats");
        REQUIRE(stats_res);
        CHECK(stats_res->body == service.graph_stats().dump());
    }
    SUBCASE("failed queries still answer 200") {
        nlohmann::json bad_query = {{"query", "MATCH (n RETURN"}};
        auto res = client.Post("/query", bad_query.dump(), "application/json");
        REQUIRE(res);
        CHECK(res->status == 200);
        CHECK(contains(res->body, "\"failed\":true"));
    }
    SUBCASE("malformed bodies answer 400 with a structured error") {
        auto res = client.Post("/query", "{not json", "application/json");
        REQUIRE(res);
        CHECK(res->status == 400);
        auto j = nlohmann::json::parse(res->body);
        CHECK(j.at("error") == "bad request");
        CHECK(contains(j.at("detail").get<std::string>(), "not valid JSON"));

        auto missing = client.Post("/retrieve", "{}", "application/json");
        REQUIRE(missing);
        CHECK(missing->status == 400);

        auto unknown = client.Get("/no-such-path");
        REQUIRE(unknown);
        CHECK(unknown->status == 404);
    }
    http.stop();
}

TEST_CASE("embedders come from the config") {
    SUBCASE("test embedder") {
        auto cfg = config_from_json(fixture_config_json());
        auto embedder = make_embedder(cfg);
        auto vecs = embedder({"synapse"});
        REQUIRE(vecs.size() == 1);
        CHECK(vecs[0].size() == 64);
        CHECK(vecs[0] == test_embed("synapse"));
    }
    SUBCASE("http embedder calls the endpoint and forwards the key") {
        httplib::Server server;
        std::string seen_auth, seen_model;
        size_t seen_inputs = 0;
        server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
            seen_auth = req.get_header_value("Authorization");
            auto body = nlohmann::json::parse(req.body);
            seen_model = body.at("model").get<std::string>();
            seen_inputs = body.at("input").size();
            nlohmann::json data = nlohmann::json::array();
            for (size_t i = 0; i < seen_inputs; ++i)
                data.push_back({{"embedding", {1.0, 0.0, 0.0}}});
            res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
        });
        int port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        std::thread runner([&] { server.listen_after_bind(); });
        server.wait_until_ready();

        setenv("KGQA_TEST_EMBED_KEY", "sekrit", 1);
        auto j = fixture_config_json();
        j["embedder"] = "http";
        j["embedder_endpoint"] = "http://127.0.0.1:" + std::to_string(port);
        j["embedder_model"] = "embedder-v1";
        j["api_key_env"] = "KGQA_TEST_EMBED_KEY";
        auto embedder = make_embedder(config_from_json(j));
        auto vecs = embedder({"a", "b"});
        REQUIRE(vecs.size() == 2);
        CHECK(vecs[0] == std::vector<double>{1.0, 0.0, 0.0});
        CHECK(seen_auth == "Bearer sekrit");
        CHECK(seen_model == "embedder-v1");
        CHECK(seen_inputs == 2);

        server.stop();
        runner.join();
    }
    SUBCASE("http embedder surfaces endpoint failures") {
        httplib::Server server;
        server.Post("/v1/embeddings", [](const httplib::Request&, httplib::Response& res) {
            res.status = 500;
            res.set_content("boom", "text/plain");
        });
        int port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        std::thread runner([&] { server.listen_after_bind(); });
        server.wait_until_ready();

        auto j = fixture_config_json();
        j["embedder"] = "http";
        j["embedder_endpoint"] = "http://127.0.0.1:" + std::to_string(port);
        auto embedder = make_embedder(config_from_json(j));
        CHECK_THROWS_WITH_AS(embedder({"x"}), doctest::Contains("status 500"), RetrieverError);

        server.stop();
        runner.join();
    }
}
