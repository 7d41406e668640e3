#include "kgqa/quizzer.hpp"

#include <algorithm>
#include <cctype>

#include "kgqa/agent/script.hpp"
#include "kgqa/ioutil.hpp"

namespace kgqa {
namespace {

const std::string kBasePrompt =
    "You are a graph-analysis agent operating on a heterogeneous knowledge graph stored in "
    "Neo4j.\n"
    "\n"
    "Your objective is to perform multi-round, task-oriented exploration to collect graph "
    "evidence that supports a specific question pattern, answer type, and difficulty "
    "constraint.\n"
    "\n"
    "You interact with the graph through a programmable Python sandbox with access to a "
    "read-only Cypher interface.\n"
    "Your exploration should be:\n"
    "- Task-oriented: focus on evidence relevant to the current task specification.\n"
    "- Incremental: gather information over multiple rounds rather than exhaustively "
    "traversing the graph.\n"
    "- Verifiable: ensure that all collected evidence can be reproduced via explicit Cypher "
    "queries.\n"
    "\n"
    "Once sufficient evidence has been collected, you should stop exploration and construct "
    "exactly one graph reasoning question together with its answer.";

const std::string kSimpleBlock =
    "Difficulty level: SIMPLE\n"
    "\n"
    "Design Goal.\n"
    "Encourage shallow, interpretable graph exploration that can be resolved with minimal "
    "reasoning steps.\n"
    "\n"
    "Exploration Constraints.\n"
    "- Restrict traversal depth to 1–2 hops.\n"
    "- Prefer a single dominant relationship type.\n"
    "- Avoid compositional or hybrid reasoning patterns.\n"
    "\n"
    "Evidence Scope.\n"
    "Collected evidence should support direct fact retrieval or simple aggregation, and be "
    "sufficient to answer the question without multi-step inference.\n"
    "\n"
    "Typical Use Cases.\n"
    "Single-hop entity lookup, attribute retrieval, or basic neighborhood queries.";

const std::string kMediumBlock =
    "Difficulty level: MEDIUM\n"
    "\n"
    "Design Goal.\n"
    "Promote controlled multi-step reasoning while maintaining clear semantic structure.\n"
    "\n"
    "Exploration Constraints.\n"
    "- Explore 2–4 hop paths with explicit intermediate nodes.\n"
    "- Involve at least two distinct relationship types or node types.\n"
    "- Allow limited use of filtering, ranking, or property constraints.\n"
    "\n"
    "Evidence Scope.\n"
    "The collected evidence should form a clear reasoning chain that can be verbalized into "
    "a natural-language question.\n"
    "\n"
    "Typical Use Cases.\n"
    "Multi-hop entity discovery, constrained aggregation, or relational queries requiring "
    "intermediate reasoning.";

const std::string kHardBlock =
    "Difficulty level: HARD\n"
    "\n"
    "Design Goal.\n"
    "Encourage non-trivial, compositional graph reasoning that cannot be resolved by local "
    "lookup.\n"
    "\n"
    "Exploration Constraints.\n"
    "- Allow hybrid or combined question patterns.\n"
    "- Explore 3–5 hop heterogeneous paths.\n"
    "- Require traversal through multiple intermediate entities and relation types.\n"
    "- Explicitly avoid staying within a single entity's immediate neighborhood.\n"
    "\n"
    "Evidence Scope.\n"
    "Evidence must support multi-step dependency between reasoning stages, ensuring that the "
    "final answer depends on earlier intermediate results.\n"
    "\n"
    "Typical Use Cases.\n"
    "Recommendation-style reasoning, cross-entity synthesis, and complex relational "
    "verification.";

const std::string kHeadBlock =
    "Pattern: <h, _, _> (Entity-Centric Exploration)\n"
    "\n"
    "Task Definition. Only the subject entity h is given, while both the predicate and "
    "object are unspecified.\n"
    "\n"
    "Exploration Objective.\n"
    "Collect broad but structured information about the subject entity, including:\n"
    "- the node type and key attributes of h,\n"
    "- dominant outgoing relation types,\n"
    "- representative neighboring entities and their types,\n"
    "- simple graph statistics.\n"
    "\n"
    "Design Constraint.\n"
    "Exploration should remain local and avoid aggregating excessive or irrelevant "
    "neighborhoods.";

const std::string kHeadRelBlock =
    "Pattern: <h, r, *> (Object-Finding)\n"
    "\n"
    "Task Definition. The subject entity h and predicate r are specified, while the object "
    "is unknown.\n"
    "\n"
    "Exploration Objective.\n"
    "Identify target entities that satisfy the given relation(s), possibly involving:\n"
    "- single-hop or multi-hop predicate chains,\n"
    "- filtering or aggregation constraints,\n"
    "- explicit intermediate nodes as supporting evidence.\n"
    "\n"
    "Design Constraint.\n"
    "The exploration must yield a reproducible query result and avoid ambiguous answer sets.";

const std::string kHeadTailBlock =
    "Pattern: <h, *, t> (Relationship Discovery)\n"
    "\n"
    "Task Definition. Both subject h and object t are given, while the relationship between "
    "them is unknown.\n"
    "\n"
    "Exploration Objective.\n"
    "Discover and explain how h and t are connected in the graph by:\n"
    "- enumerating valid relation paths,\n"
    "- identifying intermediate entities,\n"
    "- selecting concise and interpretable paths as evidence.\n"
    "\n"
    "Design Constraint.\n"
    "Preference is given to short or semantically meaningful paths rather than exhaustive "
    "enumeration.";

const std::string kTripleBlock =
    "Pattern: <h, r, t> (Verification)\n"
    "\n"
    "Task Definition. Subject, predicate, and object are all specified.\n"
    "\n"
    "Exploration Objective.\n"
    "Verify whether the specified relationship (or constrained relation chain) holds in the "
    "graph.\n"
    "\n"
    "Evidence Requirement.\n"
    "The final answer must be derived from an explicit verification query (e.g., existence "
    "check or count-based test) and supported by at least one concrete witness when the "
    "result is positive.";

const std::string kHybridBlock =
    "Hybrid Pattern (Compositional Graph Reasoning)\n"
    "\n"
    "Task Definition.\n"
    "Combine exactly two different question patterns into a single coherent question, where "
    "the second reasoning step depends on the result of the first.\n"
    "\n"
    "Exploration Objective.\n"
    "Ensure that:\n"
    "- both reasoning steps are necessary to answer the question,\n"
    "- intermediate results from the first step are explicitly reused,\n"
    "- the final question cannot be answered by a single local lookup.";

const std::string kEntityBlock =
    "Answer type: ENTITY\n"
    "\n"
    "Objective.\n"
    "Produce exactly one uniquely identifiable real-world entity as the answer.\n"
    "\n"
    "Hard Constraints.\n"
    "- The candidate answer set must be reduced to exactly one entity.\n"
    "- The model must verify uniqueness using an explicit Cypher aggregation.\n"
    "- Internal node identifiers are forbidden; only human-readable names are allowed.";

const std::string kBooleanBlock =
    "Answer type: BOOLEAN\n"
    "\n"
    "Objective.\n"
    "Verify whether a specified relationship or constraint holds in the graph.\n"
    "\n"
    "Hard Constraints.\n"
    "- The boolean value must be derived from an explicit verification query (e.g., "
    "existence check or count-based test).\n"
    "- TRUE is returned iff the computed count is strictly greater than zero.\n"
    "- At least one concrete witness must be identified when the result is TRUE.";

const std::string kNumberBlock =
    "Answer type: NUMBER\n"
    "\n"
    "Objective.\n"
    "Return a single numeric value computed from the graph.\n"
    "\n"
    "Hard Constraints.\n"
    "- The number must be produced by a Cypher aggregation query returning exactly one row.\n"
    "- LIMIT clauses are forbidden in final counting queries.";

const std::string kSetBlock =
    "Answer type: SET\n"
    "\n"
    "Objective.\n"
    "Return a small, interpretable set of entities.\n"
    "\n"
    "Hard Constraints.\n"
    "- The total set size must be computed explicitly.\n"
    "- If the set size exceeds a predefined threshold (e.g., 10), additional constraints "
    "must be introduced.\n"
    "- The final answer must be a comma-separated list of entity names.";

const std::string kReportingRule =
    "Reporting rule: when the objective is satisfied, stop exploring and finish with exactly "
    "one report block:\n"
    "<report>\n"
    "{\"question\": \"...\", \"answer\": \"...\", \"clue_nodes\": [\"<node id>\", \"...\"]}\n"
    "</report>\n"
    "The question is the natural-language question, the answer is its graph-grounded answer, "
    "and clue_nodes lists every node id explicitly used while forming them. After the "
    "report, make the very last line of that message exactly \\answer{<answer>} so the "
    "episode ends.";

const std::string& difficulty_block(Difficulty d) {
    switch (d) {
        case Difficulty::simple: return kSimpleBlock;
        case Difficulty::medium: return kMediumBlock;
        case Difficulty::hard: return kHardBlock;
    }
    throw std::invalid_argument("unknown difficulty");
}

const std::string& base_pattern_block(QueryPattern p) {
    switch (p) {
        case QueryPattern::head: return kHeadBlock;
        case QueryPattern::head_rel: return kHeadRelBlock;
        case QueryPattern::head_tail: return kHeadTailBlock;
        case QueryPattern::triple: return kTripleBlock;
        case QueryPattern::hybrid: break;
    }
    throw std::invalid_argument("hybrid has no single pattern block");
}

const std::string& answer_type_block(AnswerType t) {
    switch (t) {
        case AnswerType::entity: return kEntityBlock;
        case AnswerType::boolean: return kBooleanBlock;
        case AnswerType::number: return kNumberBlock;
        case AnswerType::set: return kSetBlock;
    }
    throw std::invalid_argument("unknown answer type");
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string to_lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

size_t draw_dim(Rng& rng, size_t n, const std::vector<double>& weights, const char* dim) {
    if (weights.empty()) return rng.index(n);
    if (weights.size() != n)
        throw std::invalid_argument(std::string(dim) + " weights need " + std::to_string(n) +
                                    " entries, got " + std::to_string(weights.size()));
    for (double w : weights)
        if (!(w >= 0)) throw std::invalid_argument(std::string(dim) + " weights must be >= 0");
    double total = 0;
    for (double w : weights) total += w;
    if (total <= 0) throw std::invalid_argument(std::string(dim) + " weights sum to zero");
    return rng.weighted(weights);
}

// The last code_interpreter call whose observation succeeded.
std::optional<std::string> last_successful_query(const agent::Trajectory& t) {
    std::optional<std::string> code;
    for (size_t i = 0; i + 1 < t.steps.size(); ++i) {
        const auto& act = t.steps[i];
        if (act.role != agent::StepRole::action || !act.tool_call) continue;
        if (act.tool_call->name != "code_interpreter") continue;
        const auto& obs = t.steps[i + 1];
        if (obs.role == agent::StepRole::observation && !obs.failed)
            code = act.tool_call->arguments.value("code", "");
    }
    return code;
}

}  // namespace

ObjectiveSpec sample_objective(Rng& rng) { return sample_objective(rng, ObjectiveWeights{}); }

ObjectiveSpec sample_objective(Rng& rng, const ObjectiveWeights& weights) {
    ObjectiveSpec spec;
    spec.answer_type = static_cast<AnswerType>(draw_dim(rng, 4, weights.answer_type, "answer_type"));
    spec.pattern = static_cast<QueryPattern>(draw_dim(rng, 5, weights.pattern, "pattern"));
    spec.difficulty = static_cast<Difficulty>(draw_dim(rng, 3, weights.difficulty, "difficulty"));
    if (spec.pattern == QueryPattern::hybrid) {
        size_t first = rng.index(4);
        size_t second = rng.index(3);
        if (second >= first) ++second;  // two distinct base patterns
        spec.hybrid_parts = {static_cast<QueryPattern>(first), static_cast<QueryPattern>(second)};
    }
    return spec;
}

QuizzerPrompt build_quizzer_prompt(const ObjectiveSpec& objective, const PropertyGraph& graph,
                                   const std::string& seed_node) {
    auto idx = graph.find_node(seed_node);
    if (!idx) throw std::invalid_argument("seed node '" + seed_node + "' not found in graph");
    const NodeRecord& seed = graph.node(*idx);

    std::string system = kBasePrompt;
    system += "\n\n" + difficulty_block(objective.difficulty);
    if (objective.pattern == QueryPattern::hybrid) {
        system += "\n\n" + kHybridBlock;
        if (objective.hybrid_parts) {
            system += "\n\nThe two patterns to combine, in order:";
            system += "\n\n" + base_pattern_block(objective.hybrid_parts->first);
            system += "\n\n" + base_pattern_block(objective.hybrid_parts->second);
        }
    } else {
        system += "\n\n" + base_pattern_block(objective.pattern);
    }
    system += "\n\n" + answer_type_block(objective.answer_type);
    system += "\n\n" + kReportingRule + "\n";

    std::string user = agent::describe_graph(graph, agent::default_code_examples());
    user += "Seed node:\n";
    user += "  - id: " + seed.id + "\n";
    user += "  - type: " + seed.node_type + "\n";
    user += "  - name: " + seed.name + "\n";
    user += "Start exploring from the seed node and construct one question that satisfies the "
            "task specification.\n";
    return {std::move(system), std::move(user)};
}

ReportParse parse_report(const std::string& final_message) {
    ReportParse rp;
    const std::string open = "<report>", close = "</report>";
    size_t o = final_message.rfind(open);
    if (o == std::string::npos) {
        rp.error = "no <report> block found";
        return rp;
    }
    size_t body_start = o + open.size();
    size_t c = final_message.find(close, body_start);
    if (c == std::string::npos) {
        rp.error = "missing </report> closing tag";
        return rp;
    }
    auto j = nlohmann::json::parse(final_message.substr(body_start, c - body_start), nullptr,
                                   false);
    if (j.is_discarded()) {
        rp.status = ReportParse::Status::bad_json;
        rp.error = "report is not valid JSON";
        return rp;
    }
    if (!j.is_object()) {
        rp.status = ReportParse::Status::bad_keys;
        rp.error = "report must be a JSON object";
        return rp;
    }
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (key != "question" && key != "answer" && key != "clue_nodes") {
            rp.status = ReportParse::Status::bad_keys;
            rp.error = "unexpected key '" + key + "'";
            return rp;
        }
    }
    for (const char* key : {"question", "answer", "clue_nodes"}) {
        if (!j.contains(key)) {
            rp.status = ReportParse::Status::bad_keys;
            rp.error = std::string("missing key '") + key + "'";
            return rp;
        }
    }
    if (!j["question"].is_string()) {
        rp.status = ReportParse::Status::bad_keys;
        rp.error = "'question' must be a string";
        return rp;
    }
    if (!j["answer"].is_string()) {
        rp.status = ReportParse::Status::bad_keys;
        rp.error = "'answer' must be a string";
        return rp;
    }
    if (!j["clue_nodes"].is_array() ||
        !std::all_of(j["clue_nodes"].begin(), j["clue_nodes"].end(),
                     [](const nlohmann::json& v) { return v.is_string(); })) {
        rp.status = ReportParse::Status::bad_keys;
        rp.error = "'clue_nodes' must be an array of strings";
        return rp;
    }
    if (j["clue_nodes"].empty()) {
        rp.status = ReportParse::Status::empty_clues;
        rp.error = "clue_nodes is empty";
        return rp;
    }
    rp.question = trim(j["question"].get<std::string>());
    rp.answer = trim(j["answer"].get<std::string>());
    if (rp.answer.empty()) {
        rp.status = ReportParse::Status::empty_answer;
        rp.error = "answer is empty";
        return rp;
    }
    for (const auto& v : j["clue_nodes"]) {
        std::string id = v.get<std::string>();
        if (std::find(rp.clue_nodes.begin(), rp.clue_nodes.end(), id) == rp.clue_nodes.end())
            rp.clue_nodes.push_back(std::move(id));
    }
    rp.status = ReportParse::Status::ok;
    return rp;
}

QuizResult run_quiz_episode(agent::ChatClient& client, const agent::ToolEnv& env,
                            const ObjectiveSpec& objective, const std::string& seed_node,
                            int budget) {
    if (!env.graph) throw std::invalid_argument("run_quiz_episode requires env.graph");
    QuizzerPrompt prompts = build_quizzer_prompt(objective, *env.graph, seed_node);

    QuizResult result;
    result.trajectory =
        agent::run_episode(client, env, prompts.user, budget, prompts.system);
    const agent::Trajectory& t = result.trajectory;

    if (t.aborted) {
        result.failure = "aborted";
        result.detail = "transport failure during the episode";
        return result;
    }
    if (!t.final_answer) {
        result.failure = "budget_exhausted";
        result.detail = "no report within " + std::to_string(budget) + " tool calls";
        return result;
    }

    const std::string* final_action = nullptr;
    for (auto it = t.steps.rbegin(); it != t.steps.rend(); ++it)
        if (it->role == agent::StepRole::action) {
            final_action = &it->text;
            break;
        }
    ReportParse report = parse_report(final_action ? *final_action : "");
    if (report.status != ReportParse::Status::ok) {
        result.failure = "unparseable_report";
        result.detail = report.error;
        return result;
    }

    for (const std::string& id : report.clue_nodes) {
        if (!env.graph->find_node(id)) {
            result.failure = "dangling_clue";
            result.detail = "clue node '" + id + "' not found in graph";
            return result;
        }
    }

    // A non-boolean answer must be derivable from the graph: re-run the last
    // successful query and require every answer element in its output.
    if (objective.answer_type != AnswerType::boolean) {
        auto code = last_successful_query(t);
        if (!code) {
            result.failure = "unverifiable_answer";
            result.detail = "no successful query to check the answer against";
            return result;
        }
        agent::ScriptResult rerun = agent::run_script(*code, *env.graph, 1 << 20);
        if (rerun.failed) {
            result.failure = "unverifiable_answer";
            result.detail = "final query failed on re-execution: " + rerun.output;
            return result;
        }
        std::string haystack = to_lower(rerun.output);
        std::vector<std::string> elements;
        if (objective.answer_type == AnswerType::set) {
            size_t start = 0;
            while (start <= report.answer.size()) {
                size_t comma = report.answer.find(',', start);
                std::string part = trim(report.answer.substr(
                    start, comma == std::string::npos ? std::string::npos : comma - start));
                if (!part.empty()) elements.push_back(std::move(part));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
        } else {
            elements.push_back(report.answer);
        }
        for (const std::string& element : elements) {
            if (haystack.find(to_lower(element)) == std::string::npos) {
                result.failure = "unverifiable_answer";
                result.detail = "answer part '" + element + "' not in the final query result";
                return result;
            }
        }
    }

    SupervisionTuple tuple;
    tuple.question = report.question;
    tuple.answer = report.answer;
    tuple.clue_nodes = report.clue_nodes;
    tuple.objective = objective;
    tuple.seed_node = seed_node;
    result.tuple = std::move(tuple);
    return result;
}

std::pair<std::vector<SupervisionTuple>, std::vector<SupervisionTuple>> filter_leakage(
    const std::vector<SupervisionTuple>& dataset, const std::set<std::string>& test_node_ids) {
    std::vector<SupervisionTuple> kept, dropped;
    for (const SupervisionTuple& tuple : dataset) {
        bool leaks = std::any_of(tuple.clue_nodes.begin(), tuple.clue_nodes.end(),
                                 [&](const std::string& id) { return test_node_ids.count(id); });
        (leaks ? dropped : kept).push_back(tuple);
    }
    return {std::move(kept), std::move(dropped)};
}

std::vector<SupervisionTuple> drop_exact_duplicates(const std::vector<SupervisionTuple>& dataset) {
    std::vector<SupervisionTuple> kept;
    std::set<std::pair<std::string, std::string>> seen;
    for (const SupervisionTuple& tuple : dataset)
        if (seen.emplace(tuple.question, tuple.answer).second) kept.push_back(tuple);
    return kept;
}

DatasetStats dataset_stats(const std::vector<SupervisionTuple>& dataset) {
    DatasetStats stats;
    stats.total = dataset.size();
    for (const SupervisionTuple& tuple : dataset) {
        ++stats.by_answer_type[to_string(tuple.objective.answer_type)];
        ++stats.by_pattern[to_string(tuple.objective.pattern)];
        ++stats.by_difficulty[to_string(tuple.objective.difficulty)];
        ++stats.by_clue_count[tuple.clue_nodes.size()];
        ++stats.by_question_tokens[static_cast<size_t>(agent::whitespace_tokens(tuple.question))];
    }
    return stats;
}

nlohmann::ordered_json stats_to_json(const DatasetStats& stats) {
    nlohmann::ordered_json j;
    j["total"] = stats.total;
    j["answer_type"] = stats.by_answer_type;
    j["pattern"] = stats.by_pattern;
    j["difficulty"] = stats.by_difficulty;
    auto size_hist = [](const std::map<size_t, size_t>& hist) {
        nlohmann::ordered_json out = nlohmann::ordered_json::object();
        for (const auto& [k, v] : hist) out[std::to_string(k)] = v;
        return out;
    };
    j["clue_count"] = size_hist(stats.by_clue_count);
    j["question_tokens"] = size_hist(stats.by_question_tokens);
    return j;
}

GenerationReport generate_dataset(agent::ChatClient& client, const agent::ToolEnv& env, Rng& rng,
                                  size_t target, size_t max_episodes, int budget) {
    if (!env.graph) throw std::invalid_argument("generate_dataset requires env.graph");
    GenerationReport report;
    while (report.dataset.size() < target && report.episodes < max_episodes) {
        ObjectiveSpec objective = sample_objective(rng);
        std::string seed = sample_seed(*env.graph, rng);
        QuizResult episode = run_quiz_episode(client, env, objective, seed, budget);
        if (episode.tuple) {
            episode.tuple->trajectory_ref = "quiz-" + std::to_string(report.episodes);
            report.dataset.push_back(std::move(*episode.tuple));
        } else {
            ++report.failures[episode.failure];
        }
        ++report.episodes;
    }
    return report;
}

void write_dataset(std::ostream& out, const std::vector<SupervisionTuple>& dataset) {
    for (const SupervisionTuple& tuple : dataset) out << tuple_to_json(tuple).dump() << '\n';
}

std::vector<SupervisionTuple> read_dataset(const std::string& path) {
    std::vector<SupervisionTuple> dataset;
    size_t row = 0;
    for (const auto& j : io::read_jsonl(path)) {
        ++row;
        try {
            dataset.push_back(tuple_from_json(j));
        } catch (const std::exception& e) {
            throw QuizzerError(path + " row " + std::to_string(row) +
                               ": bad supervision tuple: " + e.what());
        }
    }
    return dataset;
}

void validate_tuples(const std::vector<SupervisionTuple>& dataset, const PropertyGraph& graph) {
    for (const SupervisionTuple& tuple : dataset) {
        if (tuple.answer.empty())
            throw QuizzerError("tuple '" + tuple.question + "' has an empty answer");
        if (tuple.clue_nodes.empty())
            throw QuizzerError("tuple '" + tuple.question + "' has no clue nodes");
        for (const std::string& id : tuple.clue_nodes)
            if (!graph.find_node(id))
                throw QuizzerError("tuple '" + tuple.question + "' cites unknown clue node '" +
                                   id + "'");
    }
}

std::set<std::string> read_test_node_ids(const std::string& path) {
    auto lines = io::read_lines(path);
    return {lines.begin(), lines.end()};
}

}  // namespace kgqa
