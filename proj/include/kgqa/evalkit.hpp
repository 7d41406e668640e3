#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgqa/agent/client.hpp"
#include "kgqa/agent/episode.hpp"

namespace kgqa {

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One benchmark question: {id, question, answer, difficulty?} per JSONL row.
struct QaItem {
    std::string id;
    std::string question;
    std::string answer;
    std::string difficulty;  // empty when the row carries no tag
};

std::vector<QaItem> read_qa_file(const std::string& path);

// Everything measured about one benchmark question, persistable so that
// aggregate metrics can be recomputed from the record file alone.
struct EvalRecord {
    std::string id;
    std::string gold;
    std::optional<std::string> predicted;
    double f1 = 0.0;
    std::optional<bool> judge_correct;  // unset until judged, or unjudgeable
    int output_tokens = 0;              // whitespace tokens across action steps
    int tool_calls = 0;                 // budget actually consumed
    int failed_tool_calls = 0;
    double wall_time_s = 0.0;
    std::string difficulty;
    std::string note;  // "budget_exhausted", "aborted", or empty
};

nlohmann::ordered_json record_to_json(const EvalRecord& record);
EvalRecord record_from_json(const nlohmann::json& j);
void write_records(std::ostream& out, const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_records(const std::string& path);

// Token, tool-call, answer, and F1 accounting for one finished trajectory.
// wall_time_s stays 0; the caller owns timing.
EvalRecord score_trajectory(const std::string& id, const std::string& gold,
                            const std::string& difficulty,
                            const agent::Trajectory& trajectory);

// Run one episode per question through a bounded worker pool. Per-question
// trouble lands in that record's note; the batch itself never aborts.
// Records come back in dataset order regardless of concurrency.
std::vector<EvalRecord> run_benchmark(const std::vector<QaItem>& dataset,
                                      agent::ChatClient& client, const agent::ToolEnv& env,
                                      int budget, size_t concurrency);

struct MetricSummary {
    size_t records = 0;
    double mean_f1 = 0.0;
    size_t judged = 0;
    size_t judged_correct = 0;
    double judge_proportion = 0.0;  // over judged records only; 0 when none
    double mean_output_tokens = 0.0;
    double mean_tool_calls = 0.0;
    size_t total_tool_calls = 0;
    size_t total_failed_tool_calls = 0;
    double tool_failure_rate = 0.0;  // sum failed / sum calls; 0 when no calls
};

struct AggregateReport {
    MetricSummary overall;
    std::map<std::string, MetricSummary> by_difficulty;  // tagged records only
};

AggregateReport aggregate(const std::vector<EvalRecord>& records, bool by_difficulty = true);
nlohmann::ordered_json report_to_json(const AggregateReport& report);
// Aligned-column text table: one row per metric, one column per group.
std::string report_table(const AggregateReport& report);

// Grading prompt, pinned so reports can cite exactly what the judge saw.
const std::string& judge_prompt_template();  // placeholders {question} {gold} {prediction}
const char* judge_prompt_version();
std::string judge_prompt_hash();  // FNV-1a 64 over the template bytes, hex
std::string render_judge_prompt(const std::string& question, const std::string& gold,
                                const std::string& prediction);

// Ask the judge for a CORRECT/INCORRECT verdict, retrying once on an
// unparseable reply. nullopt marks the record unjudged (excluded from the
// judge proportion); transport failures also land there rather than aborting.
std::optional<bool> judge(const std::string& prediction, const std::string& gold,
                          const std::string& question, agent::ChatClient& judge_client);

// Deterministic stand-in for a judge backend: answers CORRECT iff the
// prompt's gold and predicted lines match after token normalization.
class MockJudgeClient : public agent::ChatClient {
public:
    std::string complete(const std::string& system_prompt,
                         const std::vector<agent::ChatMessage>& history,
                         const nlohmann::json& tools,
                         const agent::DecodingOptions& opts) override;
};

}  // namespace kgqa
