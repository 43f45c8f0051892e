#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "compforge/jsonl.hpp"

namespace compforge::grpo {

struct GrpoConfig {
    int n_rollouts = 8;
    double score_tol = 0.4;   // score reward tolerance
    double clip_delta = 0.2;  // ratio clip half-width
    double kl_beta = 0.04;
    double degenerate_std_epsilon = 1e-8;

    void validate() const;
};

using ClassSet = std::set<std::string>;

struct RolloutOutput {
    std::string text;
    /// Present only when the answer block could be extracted and parsed.
    std::optional<std::variant<double, ClassSet>> parsed_answer;
};

/// Composition categories accepted by class_reward (union of the CADB and
/// KU-PCP vocabularies).
const std::set<std::string>& class_vocabulary();

/// 1 iff the text holds exactly one <think>...</think> block followed by
/// exactly one <answer>...</answer> block.
int format_reward(std::string_view text);

/// Contents of the single answer block, if the text has one.
std::optional<std::string> extract_answer(std::string_view text);

/// First decimal number inside the answer block.
std::optional<double> parse_score_answer(std::string_view answer);

/// Comma/semicolon/newline separated category names, lowercased and trimmed.
/// Unknown categories raise ValidationError.
ClassSet parse_class_answer(std::string_view answer);

int score_reward(double pred, double gt, double tol);

/// k / max(|pred|, |gt|) with k = |pred ∩ gt|; 0 for an empty prediction.
double class_reward(const ClassSet& pred, const ClassSet& gt);

/// format + task_reward when format == 1, else 0.
double total_reward(int format, double task_reward);

/// (r - mean) / std with population std; all zeros when std < eps.
std::vector<double> advantages(std::span<const double> rewards, double eps);

/// mean_i min(rho_i A_i, clip(rho_i, 1-delta, 1+delta) A_i) - kl_beta * kl,
/// rho_i = exp(logp_new_i - logp_old_i), one ratio per response.
double grpo_objective(std::span<const double> logp_new, std::span<const double> logp_old,
                      std::span<const double> adv, double kl, const GrpoConfig& cfg);

/// One rollout of the reward pipeline's input JSONL.
struct RolloutRecord {
    std::string query_id;
    int rollout_index = 0;
    std::string text;
    std::optional<double> gt_score;
    std::optional<ClassSet> gt_classes;
    std::optional<double> logp_new;
    std::optional<double> logp_old;
    std::optional<double> kl;
};

RolloutRecord rollout_from_json(const Json& obj, std::size_t line);
std::vector<RolloutRecord> read_rollouts(const std::filesystem::path& path);

struct RolloutReward {
    std::string query_id;
    int rollout_index = 0;
    int format = 0;
    double task_reward = 0.0;
    double reward = 0.0;
    double advantage = 0.0;
};

struct GroupSummary {
    std::string query_id;
    std::size_t n = 0;
    double mean_reward = 0.0;
    bool degenerate = false;
    std::optional<double> objective;  // when every rollout carries log-probs
};

struct RewardReport {
    std::vector<RolloutReward> rollouts;  // sorted by (query_id, rollout_index)
    std::vector<GroupSummary> groups;
};

/// Scores every rollout, groups by query_id and normalizes within groups.
RewardReport evaluate_rollouts(const std::vector<RolloutRecord>& rollouts, const GrpoConfig& cfg);

OrderedJson to_json(const RolloutReward& r);
OrderedJson to_json(const GroupSummary& g);

}  // namespace compforge::grpo
