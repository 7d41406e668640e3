#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace kgqa::agent {

// One tool invocation as carried on the wire:
//   <tool_call>
//   {"name": "...", "arguments": {...}}
//   </tool_call>
struct ToolCall {
    std::string name;
    nlohmann::ordered_json arguments;
};

// Schemas of the registered tools (code_interpreter, node_id_retriever) in
// the shape a chat-completions endpoint expects under "tools".
const nlohmann::ordered_json& tool_schemas();

struct ToolCallParse {
    enum class Status { none, ok, malformed };
    Status status = Status::none;
    ToolCall call;      // meaningful iff status == ok
    std::string error;  // set iff status == malformed
};

// Scan a model message for the first tool_call-tagged block and validate its
// body: a JSON object with exactly the keys "name" and "arguments", the name
// registered, and the arguments matching that tool's schema. A missing block
// yields none; a present-but-invalid block yields malformed with a reason.
ToolCallParse parse_tool_call(const std::string& message_text);

std::string serialize_tool_call(const ToolCall& call);

}  // namespace kgqa::agent
