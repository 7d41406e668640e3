#include "kgqa/evalkit.hpp"

#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <set>
#include <sstream>
#include <thread>

#include "kgqa/ioutil.hpp"
#include "kgqa/reward.hpp"

namespace kgqa {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

void check_record(const EvalRecord& r, const std::string& where) {
    if (r.failed_tool_calls > r.tool_calls)
        throw EvalError(where + ": failed_tool_calls exceeds tool_calls");
    if (r.f1 < 0.0 || r.f1 > 1.0) throw EvalError(where + ": f1 outside [0, 1]");
    if (r.tool_calls < 0 || r.failed_tool_calls < 0 || r.output_tokens < 0)
        throw EvalError(where + ": negative count");
}

}  // namespace

std::vector<QaItem> read_qa_file(const std::string& path) {
    std::vector<QaItem> items;
    std::set<std::string> seen;
    size_t row = 0;
    for (const auto& j : io::read_jsonl(path)) {
        ++row;
        std::string where = path + ": row " + std::to_string(row);
        if (!j.is_object()) throw EvalError(where + ": expected a JSON object");
        QaItem item;
        try {
            item.id = j.at("id").get<std::string>();
            item.question = j.at("question").get<std::string>();
            item.answer = j.at("answer").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw EvalError(where + ": " + e.what());
        }
        if (j.contains("difficulty")) item.difficulty = j.at("difficulty").get<std::string>();
        if (item.id.empty()) throw EvalError(where + ": empty id");
        if (!seen.insert(item.id).second)
            throw EvalError(where + ": duplicate id '" + item.id + "'");
        items.push_back(std::move(item));
    }
    return items;
}

nlohmann::ordered_json record_to_json(const EvalRecord& r) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["gold"] = r.gold;
    if (r.predicted)
        j["predicted"] = *r.predicted;
    else
        j["predicted"] = nullptr;
    j["f1"] = r.f1;
    if (r.judge_correct)
        j["judge_correct"] = *r.judge_correct;
    else
        j["judge_correct"] = nullptr;
    j["output_tokens"] = r.output_tokens;
    j["tool_calls"] = r.tool_calls;
    j["failed_tool_calls"] = r.failed_tool_calls;
    j["wall_time_s"] = r.wall_time_s;
    j["difficulty"] = r.difficulty;
    j["note"] = r.note;
    return j;
}

EvalRecord record_from_json(const nlohmann::json& j) {
    EvalRecord r;
    try {
        r.id = j.at("id").get<std::string>();
        r.gold = j.at("gold").get<std::string>();
        if (!j.at("predicted").is_null()) r.predicted = j.at("predicted").get<std::string>();
        r.f1 = j.at("f1").get<double>();
        if (!j.at("judge_correct").is_null()) r.judge_correct = j.at("judge_correct").get<bool>();
        r.output_tokens = j.at("output_tokens").get<int>();
        r.tool_calls = j.at("tool_calls").get<int>();
        r.failed_tool_calls = j.at("failed_tool_calls").get<int>();
        r.wall_time_s = j.at("wall_time_s").get<double>();
        r.difficulty = j.value("difficulty", std::string());
        r.note = j.value("note", std::string());
    } catch (const nlohmann::json::exception& e) {
        throw EvalError(std::string("bad eval record: ") + e.what());
    }
    check_record(r, "record '" + r.id + "'");
    return r;
}

void write_records(std::ostream& out, const std::vector<EvalRecord>& records) {
    for (const auto& r : records) out << record_to_json(r).dump() << "\n";
}

std::vector<EvalRecord> read_records(const std::string& path) {
    std::vector<EvalRecord> records;
    size_t row = 0;
    for (const auto& j : io::read_jsonl(path)) {
        ++row;
        try {
            records.push_back(record_from_json(j));
        } catch (const EvalError& e) {
            throw EvalError(path + ": row " + std::to_string(row) + ": " + e.what());
        }
    }
    return records;
}

EvalRecord score_trajectory(const std::string& id, const std::string& gold,
                            const std::string& difficulty,
                            const agent::Trajectory& trajectory) {
    EvalRecord rec;
    rec.id = id;
    rec.gold = gold;
    rec.difficulty = difficulty;
    for (size_t i = 0; i < trajectory.steps.size(); ++i) {
        const auto& step = trajectory.steps[i];
        if (step.role == agent::StepRole::action) rec.output_tokens += step.token_count;
        if (step.role == agent::StepRole::observation && i > 0) {
            ++rec.tool_calls;
            if (step.failed) ++rec.failed_tool_calls;
        }
    }
    rec.predicted = trajectory.final_answer;
    if (rec.predicted) rec.f1 = token_f1(*rec.predicted, rec.gold);
    if (trajectory.aborted)
        rec.note = "aborted";
    else if (!trajectory.final_answer)
        rec.note = "budget_exhausted";
    return rec;
}

namespace {

EvalRecord eval_one(const QaItem& item, agent::ChatClient& client, const agent::ToolEnv& env,
                    int budget, const std::string& system_prompt) {
    EvalRecord rec;
    auto start = std::chrono::steady_clock::now();
    try {
        auto traj = agent::run_episode(client, env, item.question, budget, system_prompt);
        rec = score_trajectory(item.id, item.answer, item.difficulty, traj);
    } catch (const std::exception& e) {
        rec.id = item.id;
        rec.gold = item.answer;
        rec.difficulty = item.difficulty;
        rec.note = std::string("error: ") + e.what();
    }
    rec.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

}  // namespace

std::vector<EvalRecord> run_benchmark(const std::vector<QaItem>& dataset,
                                      agent::ChatClient& client, const agent::ToolEnv& env,
                                      int budget, size_t concurrency) {
    if (budget < 1) throw std::invalid_argument("tool budget must be at least 1");
    if (concurrency < 1) throw std::invalid_argument("concurrency must be at least 1");
    if (!env.graph) throw std::invalid_argument("benchmark environment has no graph");

    std::vector<EvalRecord> records(dataset.size());
    if (dataset.empty()) return records;
    const std::string system_prompt = agent::build_system_prompt(*env.graph);

    std::atomic<size_t> cursor{0};
    auto worker = [&] {
        while (true) {
            size_t i = cursor.fetch_add(1);
            if (i >= dataset.size()) return;
            records[i] = eval_one(dataset[i], client, env, budget, system_prompt);
        }
    };
    size_t workers = std::min(concurrency, dataset.size());
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return records;
}

namespace {

MetricSummary summarize(const std::vector<const EvalRecord*>& records) {
    MetricSummary s;
    s.records = records.size();
    if (records.empty()) return s;
    double f1 = 0, tokens = 0, calls = 0;
    for (const auto* r : records) {
        f1 += r->f1;
        tokens += r->output_tokens;
        calls += r->tool_calls;
        s.total_tool_calls += static_cast<size_t>(r->tool_calls);
        s.total_failed_tool_calls += static_cast<size_t>(r->failed_tool_calls);
        if (r->judge_correct) {
            ++s.judged;
            if (*r->judge_correct) ++s.judged_correct;
        }
    }
    auto n = static_cast<double>(records.size());
    s.mean_f1 = f1 / n;
    s.mean_output_tokens = tokens / n;
    s.mean_tool_calls = calls / n;
    if (s.judged > 0)
        s.judge_proportion = static_cast<double>(s.judged_correct) / static_cast<double>(s.judged);
    if (s.total_tool_calls > 0)
        s.tool_failure_rate = static_cast<double>(s.total_failed_tool_calls) /
                              static_cast<double>(s.total_tool_calls);
    return s;
}

}  // namespace

AggregateReport aggregate(const std::vector<EvalRecord>& records, bool by_difficulty) {
    for (const auto& r : records) check_record(r, "record '" + r.id + "'");
    AggregateReport report;
    std::vector<const EvalRecord*> all;
    std::map<std::string, std::vector<const EvalRecord*>> tagged;
    for (const auto& r : records) {
        all.push_back(&r);
        if (by_difficulty && !r.difficulty.empty()) tagged[r.difficulty].push_back(&r);
    }
    report.overall = summarize(all);
    for (const auto& [tag, group] : tagged) report.by_difficulty[tag] = summarize(group);
    return report;
}

namespace {

nlohmann::ordered_json summary_to_json(const MetricSummary& s) {
    nlohmann::ordered_json j;
    j["records"] = s.records;
    j["mean_f1"] = s.mean_f1;
    j["judged"] = s.judged;
    j["judged_correct"] = s.judged_correct;
    j["judge_proportion"] = s.judge_proportion;
    j["mean_output_tokens"] = s.mean_output_tokens;
    j["mean_tool_calls"] = s.mean_tool_calls;
    j["total_tool_calls"] = s.total_tool_calls;
    j["total_failed_tool_calls"] = s.total_failed_tool_calls;
    j["tool_failure_rate"] = s.tool_failure_rate;
    return j;
}

std::string fixed(double v, int places) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(places);
    os << v;
    return os.str();
}

std::string ratio_cell(size_t part, size_t whole) {
    if (whole == 0) return "-";
    double pct = 100.0 * static_cast<double>(part) / static_cast<double>(whole);
    return std::to_string(part) + "/" + std::to_string(whole) + " (" + fixed(pct, 1) + "%)";
}

}  // namespace

nlohmann::ordered_json report_to_json(const AggregateReport& report) {
    nlohmann::ordered_json j;
    j["overall"] = summary_to_json(report.overall);
    j["by_difficulty"] = nlohmann::ordered_json::object();
    for (const auto& [tag, summary] : report.by_difficulty)
        j["by_difficulty"][tag] = summary_to_json(summary);
    if (report.overall.judged > 0) {
        j["judge_prompt"] = {{"version", judge_prompt_version()}, {"hash", judge_prompt_hash()}};
    }
    return j;
}

std::string report_table(const AggregateReport& report) {
    std::vector<std::pair<std::string, const MetricSummary*>> columns;
    columns.emplace_back("overall", &report.overall);
    for (const auto& [tag, summary] : report.by_difficulty) columns.emplace_back(tag, &summary);

    std::vector<std::vector<std::string>> rows;
    auto add_row = [&](const std::string& name, auto&& cell) {
        std::vector<std::string> row{name};
        for (const auto& [tag, summary] : columns) row.push_back(cell(*summary));
        rows.push_back(std::move(row));
    };
    {
        std::vector<std::string> header{"metric"};
        for (const auto& [tag, summary] : columns) header.push_back(tag);
        rows.push_back(std::move(header));
    }
    add_row("records", [](const MetricSummary& s) { return std::to_string(s.records); });
    add_row("mean F1", [](const MetricSummary& s) { return fixed(s.mean_f1, 4); });
    add_row("judged correct",
            [](const MetricSummary& s) { return ratio_cell(s.judged_correct, s.judged); });
    add_row("mean output tokens",
            [](const MetricSummary& s) { return fixed(s.mean_output_tokens, 1); });
    add_row("mean tool calls", [](const MetricSummary& s) { return fixed(s.mean_tool_calls, 1); });
    add_row("tool failures", [](const MetricSummary& s) {
        return ratio_cell(s.total_failed_tool_calls, s.total_tool_calls);
    });

    std::vector<size_t> widths(rows[0].size(), 0);
    for (const auto& row : rows)
        for (size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());

    std::ostringstream os;
    for (const auto& row : rows) {
        for (size_t c = 0; c < row.size(); ++c) {
            if (c == 0) {
                os << row[c] << std::string(widths[c] - row[c].size(), ' ');
            } else {
                os << "  " << std::string(widths[c] - row[c].size(), ' ') << row[c];
            }
        }
        os << "\n";
    }
    return os.str();
}

namespace {

const char kJudgePrompt[] =
    "You are grading one answer from a question-answering system that operates on a "
    "knowledge graph.\n"
    "\n"
    "Question: {question}\n"
    "Gold answer: {gold}\n"
    "Predicted answer: {prediction}\n"
    "\n"
    "Decide whether the predicted answer conveys the same fact as the gold answer.\n"
    "Minor formatting, casing, or phrasing differences do not matter.\n"
    "Reply with exactly one token: CORRECT or INCORRECT.\n";

void replace_once(std::string& text, const std::string& placeholder, const std::string& value) {
    auto pos = text.find(placeholder);
    if (pos != std::string::npos) text.replace(pos, placeholder.size(), value);
}

std::optional<bool> parse_verdict(const std::string& reply) {
    size_t b = reply.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return std::nullopt;
    size_t e = reply.find_first_of(" \t\r\n", b);
    std::string token = reply.substr(b, e == std::string::npos ? std::string::npos : e - b);
    while (!token.empty() && std::ispunct(static_cast<unsigned char>(token.back())))
        token.pop_back();
    while (!token.empty() && std::ispunct(static_cast<unsigned char>(token.front())))
        token.erase(token.begin());
    for (auto& c : token) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (token == "CORRECT") return true;
    if (token == "INCORRECT") return false;
    return std::nullopt;
}

std::string line_after(const std::string& text, const std::string& marker) {
    auto pos = text.find(marker);
    if (pos == std::string::npos) return "";
    pos += marker.size();
    auto end = text.find('\n', pos);
    return trim(text.substr(pos, end == std::string::npos ? std::string::npos : end - pos));
}

}  // namespace

const std::string& judge_prompt_template() {
    static const std::string prompt = kJudgePrompt;
    return prompt;
}

const char* judge_prompt_version() { return "judge-v1"; }

std::string judge_prompt_hash() {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : judge_prompt_template()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    static const char* digits = "0123456789abcdef";
    std::string hex(16, '0');
    for (int i = 15; i >= 0; --i) {
        hex[static_cast<size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return hex;
}

std::string render_judge_prompt(const std::string& question, const std::string& gold,
                                const std::string& prediction) {
    std::string prompt = judge_prompt_template();
    replace_once(prompt, "{question}", question);
    replace_once(prompt, "{gold}", gold);
    replace_once(prompt, "{prediction}", prediction);
    return prompt;
}

std::optional<bool> judge(const std::string& prediction, const std::string& gold,
                          const std::string& question, agent::ChatClient& judge_client) {
    std::vector<agent::ChatMessage> messages{
        {"user", render_judge_prompt(question, gold, prediction)}};
    agent::DecodingOptions opts;
    opts.temperature = 0.0;
    opts.max_tokens = 8;
    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            auto reply = judge_client.complete("", messages, nlohmann::json::array(), opts);
            if (auto verdict = parse_verdict(reply)) return verdict;
        } catch (const agent::TransportError&) {
            return std::nullopt;
        }
    }
    return std::nullopt;
}

std::string MockJudgeClient::complete(const std::string&,
                                      const std::vector<agent::ChatMessage>& history,
                                      const nlohmann::json&, const agent::DecodingOptions&) {
    if (history.empty()) throw std::invalid_argument("judge prompt missing");
    const std::string& prompt = history.back().content;
    auto gold = normalize_tokens(line_after(prompt, "Gold answer:"));
    auto predicted = normalize_tokens(line_after(prompt, "Predicted answer:"));
    return gold == predicted ? "CORRECT" : "INCORRECT";
}

}  // namespace kgqa
