#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgqa/agent/client.hpp"
#include "kgqa/agent/protocol.hpp"
#include "kgqa/graph.hpp"
#include "kgqa/retriever.hpp"

namespace kgqa::agent {

// Shared immutable environment a tool call executes against.
struct ToolEnv {
    const PropertyGraph* graph = nullptr;
    const EmbeddingIndex* index = nullptr;
    Embedder embedder;            // embeds retriever query strings
    size_t response_cap = 4096;   // max characters per tool response
};

enum class StepRole { observation, action };

struct TrajectoryStep {
    StepRole role = StepRole::observation;
    std::string text;
    std::optional<ToolCall> tool_call;          // actions with a well-formed call
    std::optional<std::string> tool_response;   // observations after the first
    int token_count = 0;                        // whitespace tokens (actions)
    bool failed = false;                        // observation after a tool error
};

struct Trajectory {
    std::string question;
    std::vector<TrajectoryStep> steps;
    std::optional<std::string> final_answer;
    bool budget_exhausted = false;
    bool aborted = false;
};

struct ToolResult {
    std::string text;
    bool failed = false;
};

// Dispatch one validated call to its tool. Never throws; tool problems come
// back as (diagnostic, failed=true).
ToolResult execute_tool(const ToolCall& call, const ToolEnv& env);

// The corrective guidance appended to malformed-call observations.
const std::string& call_format_reminder();

// Drive one multi-turn episode: alternate client actions and tool-response
// observations until an answer wrapper appears or tool_budget calls have been
// spent. Malformed or absent tool calls consume budget and yield a failed
// observation explaining the expected format. Transport failures abort with
// a partial trajectory.
Trajectory run_episode(ChatClient& client, const ToolEnv& env,
                       const std::string& question, int tool_budget,
                       const std::string& system_prompt,
                       const DecodingOptions& opts = {});

// Chat view of a trajectory: observations as "user", actions as "assistant".
std::vector<ChatMessage> to_messages(const Trajectory& trajectory);

int whitespace_tokens(const std::string& text);

// Graph description shared by every system prompt: backend line, label
// scope, node types with their properties, edge types, and code examples.
std::string describe_graph(const GraphStats& stats, const std::string& domain_label,
                           const std::map<std::string, std::vector<std::string>>& type_properties,
                           const std::vector<std::string>& edge_types,
                           const std::string& code_examples);
std::string describe_graph(const PropertyGraph& graph, const std::string& code_examples);

// Solver system prompt: the graph description plus the final-line answer rule.
std::string build_system_prompt(const GraphStats& stats, const std::string& domain_label,
                                const std::map<std::string, std::vector<std::string>>& type_properties,
                                const std::vector<std::string>& edge_types,
                                const std::string& code_examples);
std::string build_system_prompt(const PropertyGraph& graph);
std::string build_system_prompt(const PropertyGraph& graph, const std::string& code_examples);

std::string default_code_examples();

nlohmann::ordered_json trajectory_to_json(const Trajectory& trajectory);
Trajectory trajectory_from_json(const nlohmann::json& j);

}  // namespace kgqa::agent
