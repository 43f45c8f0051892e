#include "compforge/grpo.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <regex>

#include "compforge/error.hpp"

namespace compforge::grpo {

namespace {

std::size_t count_of(std::string_view text, std::string_view needle) {
    std::size_t n = 0;
    for (std::size_t pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + 1))
        ++n;
    return n;
}

std::string trim_lower(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    std::string out(s.substr(b, e - b));
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    // collapse inner whitespace runs ("rule  of thirds")
    std::string collapsed;
    for (char c : out) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!collapsed.empty() && collapsed.back() != ' ') collapsed += ' ';
        } else {
            collapsed += c;
        }
    }
    return collapsed;
}

void check_classes(const ClassSet& s, const char* which) {
    for (const auto& c : s)
        if (!class_vocabulary().count(c))
            throw ValidationError(std::string(which) + " contains unknown category \"" + c + "\"");
}

}  // namespace

void GrpoConfig::validate() const {
    if (n_rollouts < 2) throw ConfigError("grpo.n_rollouts must be >= 2");
    if (!(score_tol > 0.0)) throw ConfigError("grpo.score_tol must be > 0");
    if (!(clip_delta > 0.0 && clip_delta < 1.0)) throw ConfigError("grpo.clip_delta must be in (0,1)");
    if (!(kl_beta >= 0.0)) throw ConfigError("grpo.kl_beta must be >= 0");
    if (!(degenerate_std_epsilon > 0.0)) throw ConfigError("grpo.degenerate_std_epsilon must be > 0");
}

const std::set<std::string>& class_vocabulary() {
    static const std::set<std::string> vocab{
        "center",     "curved",         "diagonal",  "fill the frame", "golden ratio",
        "horizontal", "pattern",        "radial",    "rule of thirds", "symmetric",
        "triangle",   "vanishing point", "vertical",
    };
    return vocab;
}

int format_reward(std::string_view text) {
    constexpr std::string_view kThinkOpen = "<think>", kThinkClose = "</think>";
    constexpr std::string_view kAnswerOpen = "<answer>", kAnswerClose = "</answer>";
    if (count_of(text, kThinkOpen) != 1 || count_of(text, kThinkClose) != 1 || count_of(text, kAnswerOpen) != 1 ||
        count_of(text, kAnswerClose) != 1)
        return 0;
    const auto t0 = text.find(kThinkOpen), t1 = text.find(kThinkClose);
    const auto a0 = text.find(kAnswerOpen), a1 = text.find(kAnswerClose);
    return (t0 < t1 && t1 < a0 && a0 < a1) ? 1 : 0;
}

std::optional<std::string> extract_answer(std::string_view text) {
    constexpr std::string_view kOpen = "<answer>", kClose = "</answer>";
    if (count_of(text, kOpen) != 1 || count_of(text, kClose) != 1) return std::nullopt;
    const auto b = text.find(kOpen) + kOpen.size();
    const auto e = text.find(kClose);
    if (e < b) return std::nullopt;
    return std::string(text.substr(b, e - b));
}

std::optional<double> parse_score_answer(std::string_view answer) {
    static const std::regex number(R"([-+]?(\d+(\.\d*)?|\.\d+)([eE][-+]?\d+)?)");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_search(answer.begin(), answer.end(), m, number)) return std::nullopt;
    const double v = std::stod(m.str());
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

ClassSet parse_class_answer(std::string_view answer) {
    ClassSet out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= answer.size(); ++i) {
        if (i == answer.size() || answer[i] == ',' || answer[i] == ';' || answer[i] == '\n') {
            std::string item = trim_lower(answer.substr(start, i - start));
            if (!item.empty()) out.insert(std::move(item));
            start = i + 1;
        }
    }
    check_classes(out, "answer");
    return out;
}

int score_reward(double pred, double gt, double tol) {
    if (!(tol > 0.0)) throw DomainError("score_reward: tolerance must be > 0");
    // Absorb representation error so a decimal error equal to tol counts as within.
    return std::abs(pred - gt) <= tol + 1e-12 ? 1 : 0;
}

double class_reward(const ClassSet& pred, const ClassSet& gt) {
    if (gt.empty() || gt.size() > 3) throw ValidationError("class_reward: ground truth needs 1 to 3 categories");
    check_classes(gt, "ground truth");
    check_classes(pred, "prediction");
    if (pred.empty()) return 0.0;
    std::size_t k = 0;
    for (const auto& c : pred) k += gt.count(c);
    return static_cast<double>(k) / static_cast<double>(std::max(pred.size(), gt.size()));
}

double total_reward(int format, double task_reward) {
    if (!(task_reward >= 0.0 && task_reward <= 1.0)) throw DomainError("total_reward: task reward outside [0,1]");
    if (format != 0 && format != 1) throw DomainError("total_reward: format reward must be 0 or 1");
    return format == 1 ? 1.0 + task_reward : 0.0;
}

std::vector<double> advantages(std::span<const double> rewards, double eps) {
    if (rewards.size() < 2) throw DomainError("advantages: need at least 2 rewards");
    const double n = static_cast<double>(rewards.size());
    const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double sd = std::sqrt(var / n);
    std::vector<double> out(rewards.size(), 0.0);
    if (sd < eps) return out;
    for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
    return out;
}

double grpo_objective(std::span<const double> logp_new, std::span<const double> logp_old,
                      std::span<const double> adv, double kl, const GrpoConfig& cfg) {
    if (logp_new.size() != logp_old.size() || logp_new.size() != adv.size())
        throw DomainError("grpo_objective: input lengths differ");
    if (logp_new.empty()) throw DomainError("grpo_objective: empty group");
    if (!(kl >= 0.0)) throw DomainError("grpo_objective: kl must be >= 0");
    double sum = 0.0;
    for (std::size_t i = 0; i < adv.size(); ++i) {
        const double rho = std::exp(logp_new[i] - logp_old[i]);
        if (!std::isfinite(rho)) throw DomainError("grpo_objective: non-finite probability ratio");
        const double clipped = std::clamp(rho, 1.0 - cfg.clip_delta, 1.0 + cfg.clip_delta);
        sum += std::min(rho * adv[i], clipped * adv[i]);
    }
    return sum / static_cast<double>(adv.size()) - cfg.kl_beta * kl;
}

RolloutRecord rollout_from_json(const Json& obj, std::size_t line) {
    FieldReader f(obj, line);
    RolloutRecord r;
    r.query_id = f.required<std::string>("query_id");
    r.rollout_index = f.required<int>("rollout_index");
    r.text = f.required<std::string>("text");
    r.gt_score = f.optional<double>("gt_score");
    if (auto classes = f.optional<std::vector<std::string>>("gt_classes")) {
        ClassSet set;
        for (const auto& c : *classes) set.insert(trim_lower(c));
        r.gt_classes = std::move(set);
    }
    r.logp_new = f.optional<double>("logp_new");
    r.logp_old = f.optional<double>("logp_old");
    r.kl = f.optional<double>("kl");
    f.finish();
    if (r.gt_score.has_value() == r.gt_classes.has_value())
        throw ValidationError("line " + std::to_string(line) + ": exactly one of gt_score / gt_classes is required");
    return r;
}

std::vector<RolloutRecord> read_rollouts(const std::filesystem::path& path) {
    std::vector<RolloutRecord> out;
    for_each_jsonl(path, [&](const Json& obj, std::size_t line) { out.push_back(rollout_from_json(obj, line)); });
    return out;
}

RewardReport evaluate_rollouts(const std::vector<RolloutRecord>& rollouts, const GrpoConfig& cfg) {
    cfg.validate();
    std::map<std::string, std::vector<const RolloutRecord*>> groups;
    for (const auto& r : rollouts) groups[r.query_id].push_back(&r);

    RewardReport report;
    for (auto& [query_id, members] : groups) {
        std::sort(members.begin(), members.end(),
                  [](const RolloutRecord* a, const RolloutRecord* b) { return a->rollout_index < b->rollout_index; });
        for (std::size_t i = 1; i < members.size(); ++i)
            if (members[i]->rollout_index == members[i - 1]->rollout_index)
                throw ValidationError("query " + query_id + ": duplicate rollout_index");
        if (members.size() < 2) throw ValidationError("query " + query_id + ": a group needs at least 2 rollouts");

        std::vector<double> rewards;
        std::vector<RolloutReward> rows;
        for (const RolloutRecord* r : members) {
            RolloutReward row;
            row.query_id = query_id;
            row.rollout_index = r->rollout_index;
            row.format = format_reward(r->text);
            if (const auto answer = extract_answer(r->text)) {
                if (r->gt_score) {
                    if (const auto pred = parse_score_answer(*answer))
                        row.task_reward = score_reward(*pred, *r->gt_score, cfg.score_tol);
                } else {
                    ClassSet pred;
                    bool parsed = true;
                    try {
                        pred = parse_class_answer(*answer);
                    } catch (const ValidationError&) {
                        parsed = false;  // an unknown category is a wrong answer, not bad input
                    }
                    if (parsed) row.task_reward = class_reward(pred, *r->gt_classes);
                    else class_reward({}, *r->gt_classes);  // still validate the ground truth
                }
            } else if (r->gt_classes) {
                class_reward({}, *r->gt_classes);
            }
            row.reward = total_reward(row.format, row.task_reward);
            rewards.push_back(row.reward);
            rows.push_back(row);
        }

        const auto adv = advantages(rewards, cfg.degenerate_std_epsilon);
        GroupSummary summary;
        summary.query_id = query_id;
        summary.n = members.size();
        summary.mean_reward = std::accumulate(rewards.begin(), rewards.end(), 0.0) / rewards.size();
        summary.degenerate = std::all_of(adv.begin(), adv.end(), [](double a) { return a == 0.0; });
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i].advantage = adv[i];

        const bool have_logp = std::all_of(members.begin(), members.end(),
                                           [](const RolloutRecord* r) { return r->logp_new && r->logp_old; });
        if (have_logp) {
            std::vector<double> lp_new, lp_old;
            std::optional<double> kl;
            for (const RolloutRecord* r : members) {
                lp_new.push_back(*r->logp_new);
                lp_old.push_back(*r->logp_old);
                if (r->kl) {
                    if (kl && *kl != *r->kl) throw ValidationError("query " + query_id + ": inconsistent kl values");
                    kl = r->kl;
                }
            }
            summary.objective = grpo_objective(lp_new, lp_old, adv, kl.value_or(0.0), cfg);
        }

        report.groups.push_back(summary);
        for (auto& row : rows) report.rollouts.push_back(std::move(row));
    }
    return report;
}

OrderedJson to_json(const RolloutReward& r) {
    OrderedJson j;
    j["query_id"] = r.query_id;
    j["rollout_index"] = r.rollout_index;
    j["format_reward"] = r.format;
    j["task_reward"] = r.task_reward;
    j["reward"] = r.reward;
    j["advantage"] = r.advantage;
    return j;
}

OrderedJson to_json(const GroupSummary& g) {
    OrderedJson j;
    j["query_id"] = g.query_id;
    j["n"] = g.n;
    j["mean_reward"] = g.mean_reward;
    j["degenerate"] = g.degenerate;
    if (g.objective) j["objective"] = *g.objective;
    return j;
}

}  // namespace compforge::grpo
