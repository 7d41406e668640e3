#pragma once
// Quizzer episodes: sample an exploration objective, prompt an LLM scout to
// explore the graph from a seed node, and parse its final report into a
// supervision tuple. Includes the dataset-level hygiene passes.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "kgqa/agent/episode.hpp"
#include "kgqa/rng.hpp"
#include "kgqa/supervision.hpp"

namespace kgqa {

struct QuizzerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Per-dimension sampling weights; an empty vector means uniform. Order
// matches the enum declarations (entity..set, H__..hybrid, simple..hard).
struct ObjectiveWeights {
    std::vector<double> answer_type;
    std::vector<double> pattern;
    std::vector<double> difficulty;
};

// Independent draws per dimension, in the pinned order answer type, pattern,
// difficulty, then (for hybrid) the two distinct base patterns to combine.
ObjectiveSpec sample_objective(Rng& rng);
ObjectiveSpec sample_objective(Rng& rng, const ObjectiveWeights& weights);

struct QuizzerPrompt {
    std::string system;
    std::string user;
};

// Deterministic assembly: base scout prompt + the difficulty, pattern, and
// answer-type blocks matching the objective + the reporting rule; the user
// prompt carries the graph description and the seed node. Throws
// std::invalid_argument when the seed node is unknown.
QuizzerPrompt build_quizzer_prompt(const ObjectiveSpec& objective, const PropertyGraph& graph,
                                   const std::string& seed_node);

struct ReportParse {
    enum class Status { ok, missing_block, bad_json, bad_keys, empty_clues, empty_answer };
    Status status = Status::missing_block;
    std::string question;
    std::string answer;
    std::vector<std::string> clue_nodes;
    std::string error;  // diagnostic for non-ok statuses
};

// Last <report>{...}</report> block in the message: a JSON object with
// exactly the keys question, answer, clue_nodes. Question and answer are
// trimmed; duplicate clue ids collapse to the first occurrence.
ReportParse parse_report(const std::string& final_message);

struct QuizResult {
    std::optional<SupervisionTuple> tuple;  // set iff failure is empty
    std::string failure;  // aborted | budget_exhausted | unparseable_report |
                          // dangling_clue | unverifiable_answer
    std::string detail;   // human-readable diagnostic for the failure log
    agent::Trajectory trajectory;
};

// One scout episode: run the agent loop under the quizzer prompt, then turn
// its report into a validated tuple. Non-boolean answers must appear in the
// re-executed output of the trajectory's last successful query.
QuizResult run_quiz_episode(agent::ChatClient& client, const agent::ToolEnv& env,
                            const ObjectiveSpec& objective, const std::string& seed_node,
                            int budget = 10);

// Drop every tuple citing a clue node from the test set; returns (kept, dropped).
std::pair<std::vector<SupervisionTuple>, std::vector<SupervisionTuple>> filter_leakage(
    const std::vector<SupervisionTuple>& dataset, const std::set<std::string>& test_node_ids);

// Keep the first occurrence of each (question, answer) pair.
std::vector<SupervisionTuple> drop_exact_duplicates(const std::vector<SupervisionTuple>& dataset);

struct DatasetStats {
    size_t total = 0;
    std::map<std::string, size_t> by_answer_type;
    std::map<std::string, size_t> by_pattern;
    std::map<std::string, size_t> by_difficulty;
    std::map<size_t, size_t> by_clue_count;
    std::map<size_t, size_t> by_question_tokens;  // whitespace token length
};

DatasetStats dataset_stats(const std::vector<SupervisionTuple>& dataset);
nlohmann::ordered_json stats_to_json(const DatasetStats& stats);

struct GenerationReport {
    std::vector<SupervisionTuple> dataset;
    size_t episodes = 0;
    std::map<std::string, size_t> failures;  // failure reason -> count
};

// Sequential generation loop: sample (objective, seed), run an episode, and
// collect successes (trajectory_ref = "quiz-<episode index>") until `target`
// tuples or `max_episodes` attempts. Sequential on purpose so a fixed seed
// plus a scripted client reproduces the dataset byte for byte.
GenerationReport generate_dataset(agent::ChatClient& client, const agent::ToolEnv& env, Rng& rng,
                                  size_t target, size_t max_episodes, int budget = 10);

// Dataset files hold one SupervisionTuple JSON object per line.
void write_dataset(std::ostream& out, const std::vector<SupervisionTuple>& dataset);
std::vector<SupervisionTuple> read_dataset(const std::string& path);

// Emission-time invariant, re-checked at load: every clue id resolves.
void validate_tuples(const std::vector<SupervisionTuple>& dataset, const PropertyGraph& graph);

// Test-node-id list: plain text, one id per line, blank lines ignored.
std::set<std::string> read_test_node_ids(const std::string& path);

}  // namespace kgqa
