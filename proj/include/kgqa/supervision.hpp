#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace kgqa {

// Exploration objective dimensions: what kind of answer the question must
// have, the structural query pattern it exercises, and how hard it should be.
enum class AnswerType { entity, boolean, number, set };
enum class QueryPattern { head, head_rel, head_tail, triple, hybrid };
enum class Difficulty { simple, medium, hard };

inline const char* to_string(AnswerType t) {
    switch (t) {
        case AnswerType::entity: return "entity";
        case AnswerType::boolean: return "boolean";
        case AnswerType::number: return "number";
        case AnswerType::set: return "set";
    }
    return "";
}

inline const char* to_string(QueryPattern p) {
    switch (p) {
        case QueryPattern::head: return "H__";
        case QueryPattern::head_rel: return "HR*";
        case QueryPattern::head_tail: return "H*T";
        case QueryPattern::triple: return "HRT";
        case QueryPattern::hybrid: return "hybrid";
    }
    return "";
}

inline const char* to_string(Difficulty d) {
    switch (d) {
        case Difficulty::simple: return "simple";
        case Difficulty::medium: return "medium";
        case Difficulty::hard: return "hard";
    }
    return "";
}

inline AnswerType answer_type_from(const std::string& s) {
    if (s == "entity") return AnswerType::entity;
    if (s == "boolean") return AnswerType::boolean;
    if (s == "number") return AnswerType::number;
    if (s == "set") return AnswerType::set;
    throw std::invalid_argument("unknown answer type: '" + s + "'");
}

inline QueryPattern pattern_from(const std::string& s) {
    if (s == "H__") return QueryPattern::head;
    if (s == "HR*") return QueryPattern::head_rel;
    if (s == "H*T") return QueryPattern::head_tail;
    if (s == "HRT") return QueryPattern::triple;
    if (s == "hybrid") return QueryPattern::hybrid;
    throw std::invalid_argument("unknown query pattern: '" + s + "'");
}

inline Difficulty difficulty_from(const std::string& s) {
    if (s == "simple") return Difficulty::simple;
    if (s == "medium") return Difficulty::medium;
    if (s == "hard") return Difficulty::hard;
    throw std::invalid_argument("unknown difficulty: '" + s + "'");
}

struct ObjectiveSpec {
    AnswerType answer_type = AnswerType::entity;
    QueryPattern pattern = QueryPattern::head;
    Difficulty difficulty = Difficulty::simple;
    // Present iff pattern == hybrid: the two base patterns combined, in order.
    std::optional<std::pair<QueryPattern, QueryPattern>> hybrid_parts;
};

// One synthesized training example plus the bookkeeping needed to audit it.
struct SupervisionTuple {
    std::string question;
    std::string answer;
    std::vector<std::string> clue_nodes;
    ObjectiveSpec objective;
    std::string seed_node;
    std::string trajectory_ref;
};

inline nlohmann::ordered_json objective_to_json(const ObjectiveSpec& o) {
    nlohmann::ordered_json j;
    j["answer_type"] = to_string(o.answer_type);
    j["pattern"] = to_string(o.pattern);
    j["difficulty"] = to_string(o.difficulty);
    if (o.hybrid_parts) {
        j["hybrid_parts"] = {to_string(o.hybrid_parts->first),
                             to_string(o.hybrid_parts->second)};
    }
    return j;
}

inline ObjectiveSpec objective_from_json(const nlohmann::json& j) {
    ObjectiveSpec o;
    o.answer_type = answer_type_from(j.at("answer_type").get<std::string>());
    o.pattern = pattern_from(j.at("pattern").get<std::string>());
    o.difficulty = difficulty_from(j.at("difficulty").get<std::string>());
    if (j.contains("hybrid_parts")) {
        const auto& hp = j.at("hybrid_parts");
        o.hybrid_parts = {pattern_from(hp.at(0).get<std::string>()),
                          pattern_from(hp.at(1).get<std::string>())};
    }
    return o;
}

inline nlohmann::ordered_json tuple_to_json(const SupervisionTuple& t) {
    nlohmann::ordered_json j;
    j["question"] = t.question;
    j["answer"] = t.answer;
    j["clue_nodes"] = t.clue_nodes;
    j["objective"] = objective_to_json(t.objective);
    j["seed_node"] = t.seed_node;
    j["trajectory_ref"] = t.trajectory_ref;
    return j;
}

inline SupervisionTuple tuple_from_json(const nlohmann::json& j) {
    SupervisionTuple t;
    t.question = j.at("question").get<std::string>();
    t.answer = j.at("answer").get<std::string>();
    t.clue_nodes = j.at("clue_nodes").get<std::vector<std::string>>();
    t.objective = objective_from_json(j.at("objective"));
    t.seed_node = j.value("seed_node", std::string());
    t.trajectory_ref = j.value("trajectory_ref", std::string());
    return t;
}

}  // namespace kgqa
