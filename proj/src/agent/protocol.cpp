#include "kgqa/agent/protocol.hpp"

namespace kgqa::agent {
namespace {

using nlohmann::ordered_json;

constexpr const char* kOpenTag = "<tool_call>";
constexpr const char* kCloseTag = "</tool_call>";

ordered_json make_schemas() {
    ordered_json code_interpreter = {
        {"type", "function"},
        {"function",
         {{"name", "code_interpreter"},
          {"description",
           "Execute Python code for querying and analyzing a heterogeneous "
           "graph stored in Neo4j. Inside the executed Python, use the "
           "provided synchronous function `cypher(query, params=None, "
           "limit=None)` (not a separate tool) to run read-only Cypher "
           "queries."},
          {"parameters",
           {{"type", "object"},
            {"properties",
             {{"code", {{"type", "string"}, {"description", "Python code"}}}}},
            {"required", {"code"}}}}}}};
    ordered_json node_id_retriever = {
        {"type", "function"},
        {"function",
         {{"name", "node_id_retriever"},
          {"description",
           "Retrieve top nodes ids from a heterogeneous graph by semantic "
           "similarity (batch). You can use this tool to get target nodes "
           "ids first and then continue next steps."},
          {"parameters",
           {{"type", "object"},
            {"properties",
             {{"queries",
               {{"type", "array"},
                {"description",
                 "A list of query strings. Such as ['Nausea', 'MTUS1']"},
                {"items", {{"type", "string"}}}}},
              {"topk",
               {{"type", "integer"},
                {"description", "Number of retrieved nodes per query. Default is 2."},
                {"default", 2}}}}},
            {"required", {"queries"}}}}}}};
    return ordered_json::array({code_interpreter, node_id_retriever});
}

ToolCallParse malformed(std::string reason) {
    ToolCallParse p;
    p.status = ToolCallParse::Status::malformed;
    p.error = std::move(reason);
    return p;
}

// Argument validation per tool: required keys present, declared types
// correct. Extra keys are tolerated (the schemas do not forbid them).
std::string check_arguments(const std::string& name, const ordered_json& args) {
    if (name == "code_interpreter") {
        if (!args.contains("code")) return "missing required argument 'code'";
        if (!args["code"].is_string()) return "argument 'code' must be a string";
        return "";
    }
    if (name == "node_id_retriever") {
        if (!args.contains("queries")) return "missing required argument 'queries'";
        const auto& q = args["queries"];
        if (!q.is_array()) return "argument 'queries' must be an array of strings";
        for (const auto& item : q)
            if (!item.is_string()) return "argument 'queries' must be an array of strings";
        if (args.contains("topk")) {
            const auto& k = args["topk"];
            if (!k.is_number_integer() || k.get<int64_t>() < 1)
                return "argument 'topk' must be a positive integer";
        }
        return "";
    }
    return "unknown tool '" + name + "'";
}

}  // namespace

const nlohmann::ordered_json& tool_schemas() {
    static const ordered_json schemas = make_schemas();
    return schemas;
}

ToolCallParse parse_tool_call(const std::string& message_text) {
    size_t open = message_text.find(kOpenTag);
    if (open == std::string::npos) return {};
    size_t body_start = open + std::char_traits<char>::length(kOpenTag);
    size_t close = message_text.find(kCloseTag, body_start);
    if (close == std::string::npos) return malformed("missing </tool_call> closing tag");

    std::string body = message_text.substr(body_start, close - body_start);
    ordered_json j = ordered_json::parse(body, nullptr, false);
    if (j.is_discarded()) return malformed("invalid JSON");
    if (!j.is_object()) return malformed("tool call must be a JSON object");
    for (const auto& [key, unused] : j.items()) {
        (void)unused;
        if (key != "name" && key != "arguments")
            return malformed("unexpected key '" + key + "'");
    }
    if (!j.contains("name")) return malformed("missing key 'name'");
    if (!j.contains("arguments")) return malformed("missing key 'arguments'");
    if (!j["name"].is_string()) return malformed("'name' must be a string");
    if (!j["arguments"].is_object()) return malformed("'arguments' must be a JSON object");

    std::string name = j["name"].get<std::string>();
    if (std::string reason = check_arguments(name, j["arguments"]); !reason.empty())
        return malformed(reason);

    ToolCallParse p;
    p.status = ToolCallParse::Status::ok;
    p.call.name = std::move(name);
    p.call.arguments = j["arguments"];
    return p;
}

std::string serialize_tool_call(const ToolCall& call) {
    ordered_json j;
    j["name"] = call.name;
    j["arguments"] = call.arguments;
    return std::string(kOpenTag) + "\n" + j.dump() + "\n" + kCloseTag;
}

}  // namespace kgqa::agent
