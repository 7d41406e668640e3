#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kgqa/agent/episode.hpp"
#include "kgqa/graph.hpp"
#include "kgqa/supervision.hpp"

namespace kgqa {

struct RewardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultDelta = 0.4;

// Last \answer{...} wrapper in the text (balanced braces), trimmed; nullopt
// when absent or unbalanced. The trajectory overload scans the final action.
std::optional<std::string> extract_answer(const std::string& text);
std::optional<std::string> extract_answer(const agent::Trajectory& trajectory);

// Lowercased, punctuation-stripped whitespace tokens.
std::vector<std::string> normalize_tokens(const std::string& text);

// Bag-of-tokens F1 with multiplicity; both empty -> 1, exactly one empty -> 0.
double token_f1(const std::string& pred, const std::string& gold);

// Fraction of clue nodes the trajectory touches: a clue counts when its id
// appears verbatim or its name appears case-insensitively in any step text.
std::pair<double, std::vector<std::pair<std::string, bool>>> clue_reward(
    const agent::Trajectory& trajectory, const std::vector<std::string>& clue_nodes,
    const PropertyGraph& graph);

struct RewardBreakdown {
    bool gated = false;   // answer wrapper missing
    double r_ans = 0;
    double r_clue = 0;
    double r_final = 0;
    double delta = kDefaultDelta;
    std::vector<std::pair<std::string, bool>> clue_hits;
};

// Case rule: no wrapper -> 0; r_ans >= delta -> r_ans;
// otherwise min(r_ans + r_clue, delta).
RewardBreakdown combined_reward(const agent::Trajectory& trajectory, const std::string& gold,
                                const std::vector<std::string>& clue_nodes,
                                const PropertyGraph& graph, double delta = kDefaultDelta);

nlohmann::ordered_json breakdown_to_json(const RewardBreakdown& breakdown);

struct AdvantageGroup {
    std::vector<double> rewards;
    double mean = 0;
    double stddev = 0;  // population standard deviation
    std::vector<double> advantages;
};

// Group-relative advantages (r_i - mean)/std; an all-equal group gets zeros.
AdvantageGroup group_advantages(const std::vector<double>& rewards);

// Mean_i min(r_i*A_i, clip(r_i, 1-eps_low, 1+eps_high)*A_i) - beta*mean(kl).
double surrogate_value(const std::vector<double>& ratios,
                       const std::vector<double>& advantages, double epsilon_low,
                       double epsilon_high, const std::vector<double>& kl_estimates,
                       double beta);

// Line-delimited training batch: a header record followed by one group
// record per tuple carrying its rollouts, reward breakdowns, and advantages.
// Rollouts are keyed by the tuple's question; each tuple must have exactly
// group_size of them.
void export_training_batch(std::ostream& out, const std::vector<SupervisionTuple>& tuples,
                           const std::map<std::string, std::vector<agent::Trajectory>>& rollouts,
                           size_t group_size, double delta, const PropertyGraph& graph);

}  // namespace kgqa
