#include "compforge/eval.hpp"

#include <array>
#include <cmath>
#include <map>
#include <tuple>

namespace compforge::eval {

namespace {

constexpr std::array<std::pair<Comparison, std::string_view>, 2> kComparisons{{
    {Comparison::VsOriginal, "vs_original"},
    {Comparison::VsGroundTruth, "vs_ground_truth"},
}};
constexpr std::array<std::pair<Judge, std::string_view>, 2> kJudges{{
    {Judge::Gpt, "gpt"},
    {Judge::Human, "human"},
}};
constexpr std::array<std::pair<Verdict, std::string_view>, 3> kVerdicts{{
    {Verdict::ModelWins, "model_wins"},
    {Verdict::ModelLoses, "model_loses"},
    {Verdict::Tie, "tie"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E e) {
    for (const auto& [k, v] : table)
        if (k == e) return v;
    return "?";
}

template <typename E, std::size_t N>
E parse_of(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view s, const char* what) {
    for (const auto& [k, v] : table)
        if (v == s) return k;
    throw ValidationError(std::string("unknown ") + what + " \"" + std::string(s) + "\"");
}

struct Tally {
    std::size_t wins = 0, losses = 0, ties = 0;
    std::size_t n() const { return wins + losses + ties; }
    void add(Verdict v) {
        if (v == Verdict::ModelWins)
            ++wins;
        else if (v == Verdict::ModelLoses)
            ++losses;
        else
            ++ties;
    }
    double rate() const {
        return 100.0 * (static_cast<double>(wins) + 0.5 * static_cast<double>(ties)) / static_cast<double>(n());
    }
};

template <typename T>
T enum_field(FieldReader& f, const std::string& key, T (*parse)(std::string_view), std::size_t line) {
    try {
        return parse(f.required<std::string>(key));
    } catch (const ValidationError& e) {
        throw ParseError(e.what(), line);
    }
}

}  // namespace

std::string_view to_string(Comparison c) { return name_of(kComparisons, c); }
std::string_view to_string(Judge j) { return name_of(kJudges, j); }
std::string_view to_string(Verdict v) { return name_of(kVerdicts, v); }
Comparison parse_comparison(std::string_view s) { return parse_of(kComparisons, s, "comparison"); }
Judge parse_judge(std::string_view s) { return parse_of(kJudges, s, "judge"); }
Verdict parse_verdict(std::string_view s) { return parse_of(kVerdicts, s, "verdict"); }

double win_rate(std::span<const Judgment> judgments, Comparison comparison, Judge judge, std::optional<Task> task) {
    Tally t;
    for (const auto& j : judgments)
        if (j.comparison == comparison && j.judge == judge && (!task || j.task == *task)) t.add(j.verdict);
    if (t.n() == 0) {
        std::string sel = std::string(to_string(comparison)) + "/" + std::string(to_string(judge));
        if (task) sel += "/" + std::string(compforge::to_string(*task));
        throw DomainError("no judgments for " + sel);
    }
    return t.rate();
}

double consistency_mean(std::span<const ConsistencyScore> scores) {
    if (scores.empty()) throw DomainError("consistency_mean of an empty list");
    double sum = 0.0;
    for (const auto& s : scores) sum += s.score;
    return sum / static_cast<double>(scores.size());
}

Judgment mirrored(Judgment j) {
    if (j.verdict == Verdict::ModelWins)
        j.verdict = Verdict::ModelLoses;
    else if (j.verdict == Verdict::ModelLoses)
        j.verdict = Verdict::ModelWins;
    return j;
}

OrderedJson to_json(const Judgment& j) {
    OrderedJson o;
    o["pair_id"] = j.pair_id;
    o["task"] = compforge::to_string(j.task);
    o["comparison"] = to_string(j.comparison);
    o["judge"] = to_string(j.judge);
    o["verdict"] = to_string(j.verdict);
    return o;
}

Judgment judgment_from_json(const Json& obj, std::size_t line) {
    FieldReader f(obj, line);
    Judgment j;
    j.pair_id = f.required<std::string>("pair_id");
    j.task = enum_field(f, "task", &compforge::parse_task, line);
    j.comparison = enum_field(f, "comparison", &parse_comparison, line);
    j.judge = enum_field(f, "judge", &parse_judge, line);
    j.verdict = enum_field(f, "verdict", &parse_verdict, line);
    f.finish();
    if (j.pair_id.empty()) throw ParseError("empty pair_id", line);
    return j;
}

OrderedJson to_json(const ConsistencyScore& c) {
    OrderedJson o;
    o["pair_id"] = c.pair_id;
    o["task"] = compforge::to_string(c.task);
    o["score"] = c.score;
    return o;
}

ConsistencyScore consistency_from_json(const Json& obj, std::size_t line) {
    FieldReader f(obj, line);
    ConsistencyScore c;
    c.pair_id = f.required<std::string>("pair_id");
    c.task = enum_field(f, "task", &compforge::parse_task, line);
    c.score = f.required<double>("score");
    f.finish();
    if (!std::isfinite(c.score) || c.score < 0.0 || c.score > 100.0)
        throw ValidationError("line " + std::to_string(line) + ": consistency score outside [0, 100] for " +
                              c.pair_id);
    return c;
}

std::vector<Judgment> parse_judgments(std::string_view text) {
    std::vector<Judgment> out;
    std::set<std::tuple<std::string, Comparison, Judge>> seen;
    for_each_jsonl_text(text, [&](const Json& obj, std::size_t line) {
        auto j = judgment_from_json(obj, line);
        if (!seen.emplace(j.pair_id, j.comparison, j.judge).second)
            throw ValidationError("line " + std::to_string(line) + ": duplicate judgment for " + j.pair_id + " (" +
                                  std::string(to_string(j.comparison)) + ", " + std::string(to_string(j.judge)) +
                                  ")");
        out.push_back(std::move(j));
    });
    return out;
}

std::vector<Judgment> read_judgments(const std::filesystem::path& path) { return parse_judgments(read_text(path)); }

std::vector<ConsistencyScore> parse_consistency(std::string_view text) {
    std::vector<ConsistencyScore> out;
    std::set<std::string> seen;
    for_each_jsonl_text(text, [&](const Json& obj, std::size_t line) {
        auto c = consistency_from_json(obj, line);
        if (!seen.insert(c.pair_id).second)
            throw ValidationError("line " + std::to_string(line) + ": duplicate consistency score for " + c.pair_id);
        out.push_back(std::move(c));
    });
    return out;
}

std::vector<ConsistencyScore> read_consistency(const std::filesystem::path& path) {
    return parse_consistency(read_text(path));
}

OrderedJson eval_report(std::span<const Judgment> judgments, std::span<const ConsistencyScore> consistency,
                        const EvalConfig& cfg) {
    std::map<Judge, std::map<Task, std::map<Comparison, Tally>>> tallies;
    for (const auto& j : judgments) {
        if (cfg.excluded.contains({j.task, j.comparison})) continue;
        tallies[j.judge][j.task][j.comparison].add(j.verdict);
    }

    OrderedJson report;
    OrderedJson rates = OrderedJson::object();
    for (const auto& [judge, by_task] : tallies) {
        OrderedJson tasks = OrderedJson::object();
        for (const auto& [task, by_cmp] : by_task) {
            OrderedJson cols = OrderedJson::object();
            for (const auto& [cmp, t] : by_cmp) {
                OrderedJson cell;
                cell["win_rate"] = t.rate();
                cell["n"] = t.n();
                cell["wins"] = t.wins;
                cell["losses"] = t.losses;
                cell["ties"] = t.ties;
                cols[std::string(to_string(cmp))] = std::move(cell);
            }
            tasks[std::string(compforge::to_string(task))] = std::move(cols);
        }
        rates[std::string(to_string(judge))] = std::move(tasks);
    }
    report["win_rates"] = std::move(rates);

    OrderedJson excluded = OrderedJson::array();
    for (const auto& [task, cmp] : cfg.excluded)
        excluded.push_back(std::string(compforge::to_string(task)) + "/" + std::string(to_string(cmp)));
    report["excluded"] = std::move(excluded);

    std::map<Task, std::vector<ConsistencyScore>> by_task;
    for (const auto& c : consistency) by_task[c.task].push_back(c);
    OrderedJson cons = OrderedJson::object();
    if (!by_task.empty()) {
        OrderedJson per_task = OrderedJson::object();
        double macro = 0.0;
        for (const auto& [task, list] : by_task) {
            const double m = consistency_mean(list);
            macro += m;
            OrderedJson cell;
            cell["mean"] = m;
            cell["n"] = list.size();
            per_task[std::string(compforge::to_string(task))] = std::move(cell);
        }
        cons["per_task"] = std::move(per_task);
        cons["macro_mean"] = macro / static_cast<double>(by_task.size());
    }
    report["consistency"] = std::move(cons);
    return report;
}

}  // namespace compforge::eval
