#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "compforge/jsonl.hpp"
#include "compforge/manifest.hpp"

namespace compforge::eval {

enum class Comparison { VsOriginal, VsGroundTruth };
enum class Judge { Gpt, Human };
enum class Verdict { ModelWins, ModelLoses, Tie };

std::string_view to_string(Comparison c);
std::string_view to_string(Judge j);
std::string_view to_string(Verdict v);
Comparison parse_comparison(std::string_view s);
Judge parse_judge(std::string_view s);
Verdict parse_verdict(std::string_view s);

struct Judgment {
    std::string pair_id;
    Task task = Task::Shift;
    Comparison comparison = Comparison::VsOriginal;
    Judge judge = Judge::Gpt;
    Verdict verdict = Verdict::Tie;
};

struct ConsistencyScore {
    std::string pair_id;
    Task task = Task::Shift;
    double score = 0.0;  // [0, 100]
};

/// 100 * (wins + ties/2) / n over the judgments matching (comparison, judge),
/// and the task when given. DomainError if nothing matches.
double win_rate(std::span<const Judgment> judgments, Comparison comparison, Judge judge,
                std::optional<Task> task = std::nullopt);

double consistency_mean(std::span<const ConsistencyScore> scores);

/// Flips wins and losses: the same verdicts seen from the opponent's side.
Judgment mirrored(Judgment j);

struct EvalConfig {
    /// (task, comparison) columns left out of the report. The zoom-in result
    /// is trivially told apart from its original, so that column is excluded.
    std::set<std::pair<Task, Comparison>> excluded{std::make_pair(Task::ZoomIn, Comparison::VsOriginal)};
};

OrderedJson to_json(const Judgment& j);
Judgment judgment_from_json(const Json& j, std::size_t line = 0);
OrderedJson to_json(const ConsistencyScore& c);
ConsistencyScore consistency_from_json(const Json& j, std::size_t line = 0);

/// Both readers reject duplicates: one judgment per (pair_id, comparison,
/// judge), one score per pair_id.
std::vector<Judgment> parse_judgments(std::string_view text);
std::vector<Judgment> read_judgments(const std::filesystem::path& path);
std::vector<ConsistencyScore> parse_consistency(std::string_view text);
std::vector<ConsistencyScore> read_consistency(const std::filesystem::path& path);

/// win_rates[judge][task][comparison] = {win_rate, n, wins, losses, ties};
/// consistency per task plus the macro average over tasks.
OrderedJson eval_report(std::span<const Judgment> judgments, std::span<const ConsistencyScore> consistency,
                        const EvalConfig& cfg = {});

}  // namespace compforge::eval
