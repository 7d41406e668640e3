// Command-line front end: graph queries, retrieval, data synthesis, agent
// benchmarking, reward scoring, training-batch export, and the HTTP service.

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kgqa/config.hpp"
#include "kgqa/evalkit.hpp"
#include "kgqa/ioutil.hpp"
#include "kgqa/quizzer.hpp"
#include "kgqa/reward.hpp"
#include "kgqa/rng.hpp"
#include "kgqa/service.hpp"

namespace {

using namespace kgqa;

// Usage-level mistakes (exit 1), as opposed to bad data (exit 2).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int fail(const char* category, const std::string& detail, int code) {
    std::cerr << nlohmann::ordered_json{{"error", category}, {"detail", detail}}.dump() << "\n";
    return code;
}

std::unique_ptr<agent::ChatClient> make_client(const HarnessConfig& cfg,
                                               const std::string& script_path) {
    if (!script_path.empty())
        return std::make_unique<agent::ScriptedClient>(
            agent::ScriptedClient::messages_from_jsonl(script_path));
    if (cfg.chat_endpoint.empty())
        throw UsageError("no chat endpoint configured; set 'chat_endpoint' or pass --script");
    return std::make_unique<agent::HttpChatClient>(chat_client_config(cfg));
}

std::vector<QaItem> qa_from_tuples(const std::vector<SupervisionTuple>& tuples) {
    std::vector<QaItem> items;
    for (size_t i = 0; i < tuples.size(); ++i) {
        QaItem item;
        item.id = tuples[i].trajectory_ref.empty() ? "tuple-" + std::to_string(i)
                                                   : tuples[i].trajectory_ref;
        item.question = tuples[i].question;
        item.answer = tuples[i].answer;
        item.difficulty = to_string(tuples[i].objective.difficulty);
        items.push_back(std::move(item));
    }
    return items;
}

struct SolveRow {
    std::string id;
    std::string question;
    std::string gold;
    std::string difficulty;
    int rollout = 0;
    agent::Trajectory trajectory;
};

std::vector<SolveRow> read_solve_file(const std::string& path) {
    std::vector<SolveRow> rows;
    size_t n = 0;
    for (const auto& j : io::read_jsonl(path)) {
        ++n;
        try {
            SolveRow row;
            row.id = j.at("id").get<std::string>();
            row.question = j.at("question").get<std::string>();
            row.gold = j.value("gold", std::string());
            row.difficulty = j.value("difficulty", std::string());
            row.rollout = j.value("rollout", 0);
            row.trajectory = agent::trajectory_from_json(j.at("trajectory"));
            rows.push_back(std::move(row));
        } catch (const std::exception& e) {
            throw io::IoError(path + ": row " + std::to_string(n) + ": " + e.what());
        }
    }
    return rows;
}

int cmd_ingest(const HarnessConfig& cfg, const std::string& out_dir) {
    auto h = load_harness(cfg, true);
    std::filesystem::create_directories(out_dir);
    Service service(h->env);
    io::atomic_write(out_dir + "/graph_stats.json", [&](std::ostream& os) {
        os << service.graph_stats().dump(2) << "\n";
    });
    io::atomic_write(out_dir + "/index.jsonl", [&](std::ostream& os) {
        for (const auto& e : h->index.entries) {
            nlohmann::ordered_json row;
            row["node_id"] = e.node_id;
            row["node_type"] = e.node_type;
            row["name"] = e.name;
            row["vec"] = e.vec;
            os << row.dump() << "\n";
        }
    });
    auto stats = h->graph.stats();
    std::cout << nlohmann::ordered_json{{"nodes", stats.node_count},
                                        {"edges", stats.edge_count},
                                        {"index_entries", h->index.entries.size()},
                                        {"dimension", h->index.dimension},
                                        {"out", out_dir}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_query(const HarnessConfig& cfg, const std::string& query_text,
              const std::string& params_json) {
    auto h = load_harness(cfg, false);
    Service service(h->env);
    nlohmann::json body{{"query", query_text}};
    if (!params_json.empty()) {
        auto p = nlohmann::json::parse(params_json, nullptr, false);
        if (p.is_discarded()) throw UsageError("--params is not valid JSON");
        body["params"] = p;
    }
    auto out = service.query(body);
    if (out.at("failed").get<bool>()) throw io::IoError(out.at("error").get<std::string>());
    std::cout << out.at("rows").get<std::string>() << "\n";
    return 0;
}

int cmd_retrieve(const HarnessConfig& cfg, const std::vector<std::string>& queries, int topk) {
    auto h = load_harness(cfg, true);
    Service service(h->env);
    nlohmann::json body{{"queries", queries}};
    if (topk > 0) body["topk"] = topk;
    auto out = service.retrieve(body);
    if (out.at("failed").get<bool>()) throw io::IoError(out.at("response").get<std::string>());
    std::cout << out.at("response").get<std::string>() << "\n";
    return 0;
}

int cmd_quiz(const HarnessConfig& cfg, const std::string& script, const std::string& out_path,
             size_t count, size_t max_episodes, const std::string& test_nodes_path,
             const std::string& stats_path) {
    auto h = load_harness(cfg, true);
    auto client = make_client(cfg, script);
    Rng rng(cfg.seed);
    if (max_episodes == 0) max_episodes = count * 4;
    auto gen = generate_dataset(*client, h->env, rng, count, max_episodes,
                                static_cast<size_t>(cfg.tool_budget));
    auto dataset = drop_exact_duplicates(gen.dataset);
    size_t dropped_duplicates = gen.dataset.size() - dataset.size();
    size_t dropped_leakage = 0;
    if (!test_nodes_path.empty()) {
        auto [kept, dropped] = filter_leakage(dataset, read_test_node_ids(test_nodes_path));
        dataset = std::move(kept);
        dropped_leakage = dropped.size();
    }
    validate_tuples(dataset, h->graph);
    io::atomic_write(out_path, [&](std::ostream& os) { write_dataset(os, dataset); });
    if (!stats_path.empty()) {
        io::atomic_write(stats_path, [&](std::ostream& os) {
            os << stats_to_json(dataset_stats(dataset)).dump(2) << "\n";
        });
    }
    nlohmann::ordered_json summary;
    summary["written"] = dataset.size();
    summary["episodes"] = gen.episodes;
    summary["failures"] = gen.failures;
    summary["dropped_duplicates"] = dropped_duplicates;
    summary["dropped_leakage"] = dropped_leakage;
    summary["out"] = out_path;
    std::cout << summary.dump() << "\n";
    return 0;
}

int cmd_solve(const HarnessConfig& cfg, const std::string& script, const std::string& qa_path,
              const std::string& tuples_path, const std::string& out_path, int rollouts) {
    if (rollouts < 1) throw UsageError("--rollouts must be at least 1");
    if (qa_path.empty() == tuples_path.empty())
        throw UsageError("solve needs exactly one of --qa or --tuples");
    auto h = load_harness(cfg, true);
    auto client = make_client(cfg, script);
    auto items = qa_path.empty() ? qa_from_tuples(read_dataset(tuples_path))
                                 : read_qa_file(qa_path);
    const std::string system_prompt = agent::build_system_prompt(h->graph);
    size_t answered = 0;
    io::atomic_write(out_path, [&](std::ostream& os) {
        for (const auto& item : items) {
            for (int k = 0; k < rollouts; ++k) {
                auto traj = agent::run_episode(*client, h->env, item.question, cfg.tool_budget,
                                               system_prompt);
                if (traj.final_answer) ++answered;
                nlohmann::ordered_json row;
                row["id"] = item.id;
                row["question"] = item.question;
                row["gold"] = item.answer;
                row["difficulty"] = item.difficulty;
                row["rollout"] = k;
                row["trajectory"] = agent::trajectory_to_json(traj);
                os << row.dump() << "\n";
            }
        }
    });
    std::cout << nlohmann::ordered_json{{"questions", items.size()},
                                        {"rollouts", rollouts},
                                        {"trajectories", items.size() * rollouts},
                                        {"answered", answered},
                                        {"out", out_path}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_eval(const HarnessConfig& cfg, const std::string& script, const std::string& qa_path,
             const std::string& solve_path, const std::string& records_path,
             const std::string& judge_mode, const std::string& records_out,
             const std::string& report_path) {
    int modes = (!qa_path.empty()) + (!solve_path.empty()) + (!records_path.empty());
    if (modes != 1) throw UsageError("eval needs exactly one of --qa, --solve, or --records");
    if (!judge_mode.empty() && judge_mode != "mock")
        throw UsageError("--judge supports only 'mock'");

    std::vector<EvalRecord> records;
    std::vector<std::string> questions;
    if (!records_path.empty()) {
        records = read_records(records_path);
        questions.assign(records.size(), "");
    } else if (!solve_path.empty()) {
        for (const auto& row : read_solve_file(solve_path)) {
            std::string id =
                row.rollout == 0 ? row.id : row.id + "#" + std::to_string(row.rollout);
            records.push_back(score_trajectory(id, row.gold, row.difficulty, row.trajectory));
            questions.push_back(row.question);
        }
    } else {
        auto h = load_harness(cfg, true);
        auto client = make_client(cfg, script);
        auto items = read_qa_file(qa_path);
        records = run_benchmark(items, *client, h->env, cfg.tool_budget, cfg.concurrency);
        for (const auto& item : items) questions.push_back(item.question);
    }
    if (judge_mode == "mock") {
        MockJudgeClient mock;
        for (size_t i = 0; i < records.size(); ++i)
            if (records[i].predicted)
                records[i].judge_correct =
                    judge(*records[i].predicted, records[i].gold, questions[i], mock);
    }
    if (!records_out.empty())
        io::atomic_write(records_out,
                         [&](std::ostream& os) { write_records(os, records); });
    auto report = aggregate(records);
    if (!report_path.empty()) {
        io::atomic_write(report_path, [&](std::ostream& os) {
            os << report_to_json(report).dump(2) << "\n";
        });
    }
    std::cout << report_table(report);
    return 0;
}

int cmd_reward(const HarnessConfig& cfg, const std::string& trajectories_path,
               const std::string& tuples_path, const std::string& out_path) {
    auto h = load_harness(cfg, false);
    auto tuples = read_dataset(tuples_path);
    std::map<std::string, const SupervisionTuple*> by_question;
    for (const auto& t : tuples) by_question[t.question] = &t;

    auto rows = read_solve_file(trajectories_path);
    std::vector<nlohmann::ordered_json> lines;
    double r_final_sum = 0;
    for (const auto& row : rows) {
        auto it = by_question.find(row.question);
        if (it == by_question.end())
            throw io::IoError("no supervision tuple for question: " + row.question);
        auto b = combined_reward(row.trajectory, it->second->answer, it->second->clue_nodes,
                                 h->graph, cfg.delta);
        r_final_sum += b.r_final;
        nlohmann::ordered_json line;
        line["id"] = row.id;
        line["question"] = row.question;
        line["rollout"] = row.rollout;
        line["reward"] = breakdown_to_json(b);
        lines.push_back(std::move(line));
    }
    if (out_path.empty()) {
        for (const auto& line : lines) std::cout << line.dump() << "\n";
    } else {
        io::atomic_write(out_path, [&](std::ostream& os) {
            for (const auto& line : lines) os << line.dump() << "\n";
        });
        std::cout << nlohmann::ordered_json{
                         {"scored", lines.size()},
                         {"mean_r_final",
                          lines.empty() ? 0.0 : r_final_sum / static_cast<double>(lines.size())},
                         {"out", out_path}}
                         .dump()
                  << "\n";
    }
    return 0;
}

int cmd_export(const HarnessConfig& cfg, const std::string& tuples_path,
               const std::string& rollouts_path, const std::string& out_path) {
    auto h = load_harness(cfg, false);
    auto tuples = read_dataset(tuples_path);
    std::map<std::string, std::vector<agent::Trajectory>> rollouts;
    for (auto& row : read_solve_file(rollouts_path))
        rollouts[row.question].push_back(std::move(row.trajectory));
    io::atomic_write(out_path, [&](std::ostream& os) {
        export_training_batch(os, tuples, rollouts, cfg.group_size, cfg.delta, h->graph);
    });
    std::cout << nlohmann::ordered_json{{"tuples", tuples.size()},
                                        {"group_size", cfg.group_size},
                                        {"delta", cfg.delta},
                                        {"out", out_path}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_serve(const HarnessConfig& cfg, const std::string& host, int port) {
    auto h = load_harness(cfg, true);
    HttpService service(h->env);
    service.start(host, port);
    std::cout << nlohmann::ordered_json{{"listening",
                                         host + ":" + std::to_string(service.port())}}
                     .dump()
              << std::endl;
    service.wait();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"agentic knowledge-graph QA harness"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file");
    std::string o_nodes, o_edges, o_domain, o_embedder, o_chat_endpoint, o_chat_model,
        o_api_key_env;
    int o_budget = 0;
    double o_delta = 0;
    size_t o_group = 0, o_concurrency = 0, o_response_cap = 0;
    uint64_t o_seed = 0;
    app.add_option("--nodes", o_nodes, "override: node file (JSONL)");
    app.add_option("--edges", o_edges, "override: edge file (JSONL)");
    app.add_option("--domain-label", o_domain, "override: graph domain label");
    app.add_option("--embedder", o_embedder, "override: embedder (test|http)");
    app.add_option("--chat-endpoint", o_chat_endpoint, "override: chat base URL");
    app.add_option("--chat-model", o_chat_model, "override: chat model name");
    app.add_option("--api-key-env", o_api_key_env,
                   "override: env var NAME holding the API key");
    app.add_option("--budget", o_budget, "override: tool budget per episode");
    app.add_option("--delta", o_delta, "override: reward threshold delta");
    app.add_option("--group-size", o_group, "override: rollouts per tuple for export");
    app.add_option("--concurrency", o_concurrency, "override: worker pool size");
    app.add_option("--response-cap", o_response_cap, "override: tool response cap (chars)");
    app.add_option("--seed", o_seed, "override: rng seed");

    auto* ingest = app.add_subcommand("ingest", "validate graph files and cache index artifacts");
    std::string ingest_out;
    ingest->add_option("--out", ingest_out, "output directory")->required();

    auto* query = app.add_subcommand("query", "run one Cypher query and print the rows");
    std::string query_text, query_params;
    query->add_option("query", query_text, "Cypher query text")->required();
    query->add_option("--params", query_params, "query parameters as a JSON object");

    auto* retrieve = app.add_subcommand("retrieve", "look up node ids for free-text queries");
    std::vector<std::string> retrieve_queries;
    int retrieve_topk = 0;
    retrieve->add_option("queries", retrieve_queries, "query strings")->required();
    retrieve->add_option("--topk", retrieve_topk, "hits per query (default 2)");

    auto* quiz = app.add_subcommand("quiz", "synthesize supervision tuples by graph exploration");
    std::string quiz_out, quiz_script, quiz_test_nodes, quiz_stats;
    size_t quiz_count = 0, quiz_max_episodes = 0;
    quiz->add_option("--out", quiz_out, "dataset file to write")->required();
    quiz->add_option("--count", quiz_count, "tuples to generate")->required();
    quiz->add_option("--max-episodes", quiz_max_episodes,
                     "episode cap (default 4x count)");
    quiz->add_option("--script", quiz_script, "scripted client messages (JSONL)");
    quiz->add_option("--test-nodes", quiz_test_nodes,
                     "node ids whose tuples must be dropped (text file)");
    quiz->add_option("--stats", quiz_stats, "write dataset statistics JSON here");

    auto* solve = app.add_subcommand("solve", "run the agent over questions, keeping trajectories");
    std::string solve_qa, solve_tuples, solve_out, solve_script;
    int solve_rollouts = 1;
    solve->add_option("--qa", solve_qa, "QA file (JSONL: id, question, answer, difficulty?)");
    solve->add_option("--tuples", solve_tuples, "supervision tuple dataset as questions");
    solve->add_option("--out", solve_out, "trajectory file to write")->required();
    solve->add_option("--script", solve_script, "scripted client messages (JSONL)");
    solve->add_option("--rollouts", solve_rollouts, "rollouts per question (default 1)");

    auto* eval = app.add_subcommand("eval", "score answers into records and a metric report");
    std::string eval_qa, eval_solve, eval_records, eval_judge, eval_records_out, eval_report,
        eval_script;
    eval->add_option("--qa", eval_qa, "QA file to benchmark live");
    eval->add_option("--script", eval_script, "scripted client messages (JSONL)");
    eval->add_option("--solve", eval_solve, "score an existing solve output");
    eval->add_option("--records", eval_records, "re-aggregate an existing record file");
    eval->add_option("--judge", eval_judge, "judge mode: mock");
    eval->add_option("--records-out", eval_records_out, "write per-question records here");
    eval->add_option("--report", eval_report, "write the aggregate report JSON here");

    auto* reward = app.add_subcommand("reward", "score trajectories against supervision tuples");
    std::string reward_traj, reward_tuples, reward_out;
    reward->add_option("--trajectories", reward_traj, "solve output (JSONL)")->required();
    reward->add_option("--tuples", reward_tuples, "supervision tuple dataset")->required();
    reward->add_option("--out", reward_out, "write scored lines here instead of stdout");

    auto* exp = app.add_subcommand("export", "build a grouped training batch with advantages");
    std::string export_tuples, export_rollouts, export_out;
    exp->add_option("--tuples", export_tuples, "supervision tuple dataset")->required();
    exp->add_option("--rollouts", export_rollouts, "solve output with group_size rollouts")
        ->required();
    exp->add_option("--out", export_out, "batch file to write")->required();

    auto* serve = app.add_subcommand("serve", "expose the environment over HTTP");
    std::string serve_host = "127.0.0.1";
    int serve_port = 8080;
    serve->add_option("--host", serve_host, "bind address (default 127.0.0.1)");
    serve->add_option("--port", serve_port, "port (default 8080, 0 picks one)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        HarnessConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        if (app.count("--nodes")) cfg.nodes_path = o_nodes;
        if (app.count("--edges")) cfg.edges_path = o_edges;
        if (app.count("--domain-label")) cfg.domain_label = o_domain;
        if (app.count("--embedder")) cfg.embedder = o_embedder;
        if (app.count("--chat-endpoint")) cfg.chat_endpoint = o_chat_endpoint;
        if (app.count("--chat-model")) cfg.chat_model = o_chat_model;
        if (app.count("--api-key-env")) cfg.api_key_env = o_api_key_env;
        if (app.count("--budget")) cfg.tool_budget = o_budget;
        if (app.count("--delta")) cfg.delta = o_delta;
        if (app.count("--group-size")) cfg.group_size = o_group;
        if (app.count("--concurrency")) cfg.concurrency = o_concurrency;
        if (app.count("--response-cap")) cfg.response_cap = o_response_cap;
        if (app.count("--seed")) cfg.seed = o_seed;

        if (ingest->parsed()) return cmd_ingest(cfg, ingest_out);
        if (query->parsed()) return cmd_query(cfg, query_text, query_params);
        if (retrieve->parsed()) return cmd_retrieve(cfg, retrieve_queries, retrieve_topk);
        if (quiz->parsed())
            return cmd_quiz(cfg, quiz_script, quiz_out, quiz_count, quiz_max_episodes,
                            quiz_test_nodes, quiz_stats);
        if (solve->parsed())
            return cmd_solve(cfg, solve_script, solve_qa, solve_tuples, solve_out,
                             solve_rollouts);
        if (eval->parsed())
            return cmd_eval(cfg, eval_script, eval_qa, eval_solve, eval_records, eval_judge,
                            eval_records_out, eval_report);
        if (reward->parsed()) return cmd_reward(cfg, reward_traj, reward_tuples, reward_out);
        if (exp->parsed()) return cmd_export(cfg, export_tuples, export_rollouts, export_out);
        if (serve->parsed()) return cmd_serve(cfg, serve_host, serve_port);
        return fail("usage error", "no command given", 1);
    } catch (const agent::TransportError& e) {
        return fail("transport error", e.what(), 3);
    } catch (const UsageError& e) {
        return fail("usage error", e.what(), 1);
    } catch (const std::invalid_argument& e) {
        return fail("usage error", e.what(), 1);
    } catch (const std::exception& e) {
        return fail("data error", e.what(), 2);
    }
}
