#include "kgqa/reward.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace kgqa {
namespace {

const std::string kWrapper = "\\answer{";

std::string to_lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::optional<std::string> extract_answer(const std::string& text) {
    size_t open = text.rfind(kWrapper);
    if (open == std::string::npos) return std::nullopt;
    size_t start = open + kWrapper.size();
    int depth = 1;
    for (size_t i = start; i < text.size(); ++i) {
        if (text[i] == '{') ++depth;
        else if (text[i] == '}' && --depth == 0)
            return trim(text.substr(start, i - start));
    }
    return std::nullopt;  // unbalanced braces read as no answer
}

std::optional<std::string> extract_answer(const agent::Trajectory& trajectory) {
    for (auto it = trajectory.steps.rbegin(); it != trajectory.steps.rend(); ++it)
        if (it->role == agent::StepRole::action) return extract_answer(it->text);
    return std::nullopt;
}

std::vector<std::string> normalize_tokens(const std::string& text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (unsigned char c : text) {
        if (std::ispunct(c))
            cleaned += ' ';
        else
            cleaned += static_cast<char>(std::tolower(c));
    }
    std::vector<std::string> tokens;
    size_t i = 0;
    while (i < cleaned.size()) {
        while (i < cleaned.size() && std::isspace(static_cast<unsigned char>(cleaned[i]))) ++i;
        size_t j = i;
        while (j < cleaned.size() && !std::isspace(static_cast<unsigned char>(cleaned[j]))) ++j;
        if (j > i) tokens.push_back(cleaned.substr(i, j - i));
        i = j;
    }
    return tokens;
}

double token_f1(const std::string& pred, const std::string& gold) {
    std::vector<std::string> p = normalize_tokens(pred);
    std::vector<std::string> g = normalize_tokens(gold);
    if (p.empty() && g.empty()) return 1.0;
    if (p.empty() || g.empty()) return 0.0;
    std::map<std::string, int> bag;
    for (const auto& tok : g) ++bag[tok];
    int inter = 0;
    for (const auto& tok : p) {
        auto it = bag.find(tok);
        if (it != bag.end() && it->second > 0) {
            --it->second;
            ++inter;
        }
    }
    return 2.0 * inter / static_cast<double>(p.size() + g.size());
}

std::pair<double, std::vector<std::pair<std::string, bool>>> clue_reward(
    const agent::Trajectory& trajectory, const std::vector<std::string>& clue_nodes,
    const PropertyGraph& graph) {
    if (clue_nodes.empty()) throw RewardError("clue_nodes must be non-empty");

    std::vector<std::string> lowered_steps;
    lowered_steps.reserve(trajectory.steps.size());
    for (const auto& step : trajectory.steps) lowered_steps.push_back(to_lower(step.text));

    std::vector<std::pair<std::string, bool>> hits;
    hits.reserve(clue_nodes.size());
    size_t hit_count = 0;
    for (const std::string& id : clue_nodes) {
        auto idx = graph.find_node(id);
        if (!idx) throw RewardError("clue node '" + id + "' not found in graph");
        const std::string& name = graph.nodes()[*idx].name;
        std::string lowered_name = to_lower(name);
        bool hit = false;
        for (size_t s = 0; s < trajectory.steps.size() && !hit; ++s) {
            if (trajectory.steps[s].text.find(id) != std::string::npos) hit = true;
            else if (!name.empty() && lowered_steps[s].find(lowered_name) != std::string::npos)
                hit = true;
        }
        hit_count += hit;
        hits.emplace_back(id, hit);
    }
    return {static_cast<double>(hit_count) / static_cast<double>(clue_nodes.size()),
            std::move(hits)};
}

RewardBreakdown combined_reward(const agent::Trajectory& trajectory, const std::string& gold,
                                const std::vector<std::string>& clue_nodes,
                                const PropertyGraph& graph, double delta) {
    if (!(delta > 0.0 && delta <= 1.0)) throw RewardError("delta must be in (0, 1]");
    RewardBreakdown b;
    b.delta = delta;
    std::tie(b.r_clue, b.clue_hits) = clue_reward(trajectory, clue_nodes, graph);
    auto answer = extract_answer(trajectory);
    if (!answer) {
        b.gated = true;
        return b;  // r_ans and r_final stay 0
    }
    b.r_ans = token_f1(*answer, gold);
    b.r_final = b.r_ans >= delta ? b.r_ans : std::min(b.r_ans + b.r_clue, delta);
    return b;
}

nlohmann::ordered_json breakdown_to_json(const RewardBreakdown& breakdown) {
    nlohmann::ordered_json j;
    j["gated"] = breakdown.gated;
    j["r_ans"] = breakdown.r_ans;
    j["r_clue"] = breakdown.r_clue;
    j["r_final"] = breakdown.r_final;
    j["delta"] = breakdown.delta;
    auto& hits = j["clue_hits"] = nlohmann::ordered_json::array();
    for (const auto& [id, hit] : breakdown.clue_hits)
        hits.push_back({{"node_id", id}, {"hit", hit}});
    return j;
}

AdvantageGroup group_advantages(const std::vector<double>& rewards) {
    if (rewards.size() < 2) throw RewardError("advantage group needs at least 2 rewards");
    AdvantageGroup g;
    g.rewards = rewards;
    double sum = 0;
    for (double r : rewards) sum += r;
    g.mean = sum / static_cast<double>(rewards.size());

    auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
    if (*lo == *hi) {
        // Degenerate group: no signal, exactly zero advantages.
        g.stddev = 0;
        g.advantages.assign(rewards.size(), 0.0);
        return g;
    }
    double var = 0;
    for (double r : rewards) var += (r - g.mean) * (r - g.mean);
    var /= static_cast<double>(rewards.size());
    g.stddev = std::sqrt(var);
    g.advantages.reserve(rewards.size());
    for (double r : rewards) g.advantages.push_back((r - g.mean) / g.stddev);
    return g;
}

double surrogate_value(const std::vector<double>& ratios,
                       const std::vector<double>& advantages, double epsilon_low,
                       double epsilon_high, const std::vector<double>& kl_estimates,
                       double beta) {
    if (ratios.size() != advantages.size() || ratios.size() != kl_estimates.size())
        throw RewardError("ratios, advantages, and kl_estimates must have equal length");
    if (ratios.empty()) throw RewardError("surrogate_value needs at least one term");
    if (epsilon_low < 0 || epsilon_high < 0) throw RewardError("epsilons must be >= 0");
    if (beta < 0) throw RewardError("beta must be >= 0");

    double policy = 0;
    double kl = 0;
    for (size_t i = 0; i < ratios.size(); ++i) {
        double clipped = std::clamp(ratios[i], 1.0 - epsilon_low, 1.0 + epsilon_high);
        policy += std::min(ratios[i] * advantages[i], clipped * advantages[i]);
        kl += kl_estimates[i];
    }
    double n = static_cast<double>(ratios.size());
    return policy / n - beta * (kl / n);
}

void export_training_batch(std::ostream& out, const std::vector<SupervisionTuple>& tuples,
                           const std::map<std::string, std::vector<agent::Trajectory>>& rollouts,
                           size_t group_size, double delta, const PropertyGraph& graph) {
    nlohmann::ordered_json header;
    header["record"] = "header";
    header["group_size"] = group_size;
    header["delta"] = delta;
    header["tuples"] = tuples.size();
    out << header.dump() << '\n';

    for (const SupervisionTuple& tuple : tuples) {
        auto it = rollouts.find(tuple.question);
        if (it == rollouts.end())
            throw RewardError("no rollouts for question: " + tuple.question);
        const std::vector<agent::Trajectory>& group = it->second;
        if (group.size() != group_size)
            throw RewardError("expected " + std::to_string(group_size) + " rollouts, got " +
                              std::to_string(group.size()) + " for question: " + tuple.question);

        std::vector<RewardBreakdown> breakdowns;
        std::vector<double> rewards;
        breakdowns.reserve(group.size());
        rewards.reserve(group.size());
        for (const agent::Trajectory& trajectory : group) {
            breakdowns.push_back(
                combined_reward(trajectory, tuple.answer, tuple.clue_nodes, graph, delta));
            rewards.push_back(breakdowns.back().r_final);
        }
        AdvantageGroup advantages = group_advantages(rewards);

        nlohmann::ordered_json rec;
        rec["record"] = "group";
        rec["question"] = tuple.question;
        rec["answer"] = tuple.answer;
        rec["clue_nodes"] = tuple.clue_nodes;
        rec["objective"] = objective_to_json(tuple.objective);
        auto& rolls = rec["rollouts"] = nlohmann::ordered_json::array();
        for (size_t i = 0; i < group.size(); ++i) {
            nlohmann::ordered_json r;
            r["trajectory"] = agent::trajectory_to_json(group[i]);
            r["reward"] = breakdown_to_json(breakdowns[i]);
            r["advantage"] = advantages.advantages[i];
            rolls.push_back(std::move(r));
        }
        out << rec.dump() << '\n';
    }
}

}  // namespace kgqa
