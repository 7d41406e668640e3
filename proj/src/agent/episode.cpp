#include "kgqa/agent/episode.hpp"

#include <algorithm>
#include <sstream>

#include "kgqa/agent/script.hpp"
#include "kgqa/reward.hpp"
#include "kgqa/value.hpp"

namespace kgqa::agent {
namespace {

constexpr size_t kMinRenderBudget = 64;

// Flat byte-cap fallback for multi-print or retriever responses that exceed
// the budget after row-level truncation already ran.
std::string cap_response(std::string text, size_t cap) {
    cap = std::max(cap, kMinRenderBudget);
    if (text.size() <= cap) return text;
    const std::string marker = " …(truncated)";
    size_t keep = cap - marker.size();
    // Do not cut through a UTF-8 sequence.
    while (keep > 0 && (static_cast<unsigned char>(text[keep]) & 0xc0) == 0x80) --keep;
    return text.substr(0, keep) + marker;
}

std::string render_hits(int64_t topk, const std::vector<std::vector<RetrievalHit>>& per_query) {
    std::string out = "{'topk': " + std::to_string(topk) + ", 'results': [";
    for (size_t q = 0; q < per_query.size(); ++q) {
        if (q) out += ", ";
        out += '[';
        for (size_t i = 0; i < per_query[q].size(); ++i) {
            const RetrievalHit& hit = per_query[q][i];
            if (i) out += ", ";
            out += "{'node_id': " + repr_string(hit.node_id) +
                   ", 'node_type': " + repr_string(hit.node_type) +
                   ", 'score': " + repr_double(report_score(hit.score)) +
                   ", 'name': " + repr_string(hit.name) + "}";
        }
        out += ']';
    }
    out += "]}";
    return out;
}

ToolResult run_retriever(const ToolCall& call, const ToolEnv& env) {
    auto queries = call.arguments.at("queries").get<std::vector<std::string>>();
    int64_t topk = 2;
    if (call.arguments.contains("topk")) topk = call.arguments["topk"].get<int64_t>();

    std::vector<std::vector<RetrievalHit>> per_query;
    if (env.index == nullptr || env.index->entries.empty()) {
        per_query.assign(queries.size(), {});
    } else {
        if (!env.embedder) return {"node_id_retriever is not available: no embedder configured", true};
        try {
            per_query = retrieve(*env.index, queries, static_cast<size_t>(topk), env.embedder);
        } catch (const RetrieverError& e) {
            return {std::string("retriever error: ") + e.what(), true};
        }
    }
    return {cap_response(render_hits(topk, per_query), env.response_cap), false};
}

}  // namespace

const std::string& call_format_reminder() {
    static const std::string text =
        "Respond with exactly one block of the form\n"
        "<tool_call>\n"
        "{\"name\": \"tool_name\", \"arguments\": {...}}\n"
        "</tool_call>\n"
        "or finish by making the very last line \\answer{FINAL_ANSWER}.";
    return text;
}

ToolResult execute_tool(const ToolCall& call, const ToolEnv& env) {
    if (call.name == "code_interpreter") {
        if (env.graph == nullptr)
            return {"code_interpreter is not available: no graph loaded", true};
        std::string code = call.arguments.at("code").get<std::string>();
        ScriptResult r = run_script(code, *env.graph,
                                    std::max(env.response_cap, kMinRenderBudget));
        return {cap_response(std::move(r.output), env.response_cap), r.failed};
    }
    if (call.name == "node_id_retriever") return run_retriever(call, env);
    return {"unknown tool: '" + call.name + "'", true};
}

int whitespace_tokens(const std::string& text) {
    std::istringstream in(text);
    std::string tok;
    int n = 0;
    while (in >> tok) ++n;
    return n;
}

std::vector<ChatMessage> to_messages(const Trajectory& trajectory) {
    std::vector<ChatMessage> messages;
    messages.reserve(trajectory.steps.size());
    for (const TrajectoryStep& step : trajectory.steps)
        messages.push_back({step.role == StepRole::action ? "assistant" : "user", step.text});
    return messages;
}

Trajectory run_episode(ChatClient& client, const ToolEnv& env,
                       const std::string& question, int tool_budget,
                       const std::string& system_prompt, const DecodingOptions& opts) {
    if (tool_budget < 1) throw std::invalid_argument("tool_budget must be >= 1");

    Trajectory t;
    t.question = question;
    t.steps.push_back({StepRole::observation, question, std::nullopt, std::nullopt, 0, false});

    int calls_made = 0;
    while (true) {
        std::string message;
        try {
            message = client.complete(system_prompt, to_messages(t), tool_schemas(), opts);
        } catch (const TransportError&) {
            t.aborted = true;
            return t;
        }

        TrajectoryStep action{StepRole::action, message, std::nullopt, std::nullopt,
                              whitespace_tokens(message), false};

        // The answer wrapper ends the episode even when a tool call is
        // also present: the model has committed to a final answer.
        if (auto answer = extract_answer(message)) {
            t.steps.push_back(std::move(action));
            t.final_answer = std::move(answer);
            return t;
        }

        ToolCallParse parsed = parse_tool_call(message);
        std::string response;
        bool failed = false;
        if (parsed.status == ToolCallParse::Status::ok) {
            action.tool_call = parsed.call;
            t.steps.push_back(std::move(action));
            ToolResult result = execute_tool(parsed.call, env);
            response = std::move(result.text);
            failed = result.failed;
        } else {
            // Malformed and call-free actions still consume budget: the turn
            // was spent, and the model needs corrective feedback.
            t.steps.push_back(std::move(action));
            std::string reason = parsed.status == ToolCallParse::Status::malformed
                                     ? "malformed tool call: " + parsed.error
                                     : "no tool call or final answer found";
            response = "Error: " + reason + ". " + call_format_reminder();
            failed = true;
        }
        ++calls_made;
        t.steps.push_back({StepRole::observation,
                           "<tool_response>\n" + response + "\n</tool_response>",
                           std::nullopt, response, 0, failed});
        if (calls_made >= tool_budget) {
            t.budget_exhausted = true;
            return t;
        }
    }
}

std::string describe_graph(const GraphStats& stats, const std::string& domain_label,
                           const std::map<std::string, std::vector<std::string>>& type_properties,
                           const std::vector<std::string>& edge_types,
                           const std::string& code_examples) {
    auto name_list = [](const auto& names) {
        std::string s = "[";
        bool first = true;
        for (const auto& n : names) {
            if (!first) s += ", ";
            s += repr_string(n);
            first = false;
        }
        return s + "]";
    };

    std::vector<std::string> node_types;
    node_types.reserve(stats.nodes_per_type.size());
    for (const auto& [type, count] : stats.nodes_per_type) {
        (void)count;
        node_types.push_back(type);
    }

    std::string props = "{";
    bool first = true;
    for (const auto& [type, keys] : type_properties) {
        if (!first) props += ", ";
        props += repr_string(type) + ": " + name_list(keys);
        first = false;
    }
    props += "}";

    std::string out;
    out += "You are given a";
    if (!domain_label.empty()) out += " " + domain_label;
    out += " heterogeneous knowledge graph stored in Neo4j.\n";
    out += "  - Backend: Neo4j (Cypher)\n";
    out += "  - Label scope: " + (domain_label.empty() ? std::string("(none)") : ":" + domain_label) + "\n";
    out += "  - Node properties:\n";
    out += "    - The dataset has these node_types: " + name_list(node_types) + "\n";
    out += "    - each node_type has its own set of type-specific properties: " + props + "\n";
    out += "    - There are several types of edges (relationship type) in this graph: " +
           name_list(edge_types) + "\n";
    out += "  - How to query in code:\n";
    out += code_examples;
    if (!code_examples.empty() && code_examples.back() != '\n') out += '\n';
    return out;
}

std::string describe_graph(const PropertyGraph& graph, const std::string& code_examples) {
    return describe_graph(graph.stats(), graph.domain_label(), graph.node_type_properties(),
                          graph.edge_types(), code_examples);
}

std::string build_system_prompt(const GraphStats& stats, const std::string& domain_label,
                                const std::map<std::string, std::vector<std::string>>& type_properties,
                                const std::vector<std::string>& edge_types,
                                const std::string& code_examples) {
    return describe_graph(stats, domain_label, type_properties, edge_types, code_examples) +
           "- Output rule: The very last line of your response must be exactly in the form "
           "\\answer{FINAL_ANSWER}. Do not include any extra text on that last line.\n";
}

std::string build_system_prompt(const PropertyGraph& graph) {
    return build_system_prompt(graph, default_code_examples());
}

std::string build_system_prompt(const PropertyGraph& graph, const std::string& code_examples) {
    return build_system_prompt(graph.stats(), graph.domain_label(), graph.node_type_properties(),
                               graph.edge_types(), code_examples);
}

std::string default_code_examples() {
    return "rows = cypher(\"\"\"\n"
           "MATCH (n:Disease {id: 'DOID:10652'})-[r]->(m)\n"
           "RETURN type(r) AS rel_type, count(DISTINCT m) AS count\n"
           "ORDER BY count DESC\n"
           "\"\"\")\n"
           "print(rows)";
}

nlohmann::ordered_json trajectory_to_json(const Trajectory& trajectory) {
    nlohmann::ordered_json j;
    j["question"] = trajectory.question;
    auto& steps = j["steps"] = nlohmann::ordered_json::array();
    for (const TrajectoryStep& step : trajectory.steps) {
        nlohmann::ordered_json s;
        s["role"] = step.role == StepRole::action ? "action" : "observation";
        s["text"] = step.text;
        if (step.tool_call) {
            s["tool_call"] = {{"name", step.tool_call->name},
                              {"arguments", step.tool_call->arguments}};
        }
        if (step.tool_response) s["tool_response"] = *step.tool_response;
        s["token_count"] = step.token_count;
        s["failed"] = step.failed;
        steps.push_back(std::move(s));
    }
    if (trajectory.final_answer)
        j["final_answer"] = *trajectory.final_answer;
    else
        j["final_answer"] = nullptr;
    j["budget_exhausted"] = trajectory.budget_exhausted;
    j["aborted"] = trajectory.aborted;
    return j;
}

Trajectory trajectory_from_json(const nlohmann::json& j) {
    Trajectory t;
    t.question = j.at("question").get<std::string>();
    for (const auto& s : j.at("steps")) {
        TrajectoryStep step;
        std::string role = s.at("role").get<std::string>();
        if (role != "action" && role != "observation")
            throw std::invalid_argument("unknown step role '" + role + "'");
        step.role = role == "action" ? StepRole::action : StepRole::observation;
        step.text = s.at("text").get<std::string>();
        if (s.contains("tool_call") && !s["tool_call"].is_null()) {
            ToolCall call;
            call.name = s["tool_call"].at("name").get<std::string>();
            call.arguments = s["tool_call"].at("arguments");
            step.tool_call = std::move(call);
        }
        if (s.contains("tool_response") && !s["tool_response"].is_null())
            step.tool_response = s["tool_response"].get<std::string>();
        step.token_count = s.value("token_count", 0);
        step.failed = s.value("failed", false);
        t.steps.push_back(std::move(step));
    }
    if (j.contains("final_answer") && !j["final_answer"].is_null())
        t.final_answer = j["final_answer"].get<std::string>();
    t.budget_exhausted = j.value("budget_exhausted", false);
    t.aborted = j.value("aborted", false);
    return t;
}

}  // namespace kgqa::agent
