#include "compforge/stats.hpp"

#include <cctype>
#include <set>

namespace compforge::stats {

namespace {

std::size_t word_count(std::string_view s) {
    std::size_t n = 0;
    bool in_word = false;
    for (unsigned char c : s) {
        const bool space = std::isspace(c) != 0;
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

OrderedJson to_json(const TextStats& t) {
    OrderedJson j;
    j["n"] = t.n;
    j["mean_word_len"] = t.mean_word_len;
    j["mean_char_len"] = t.mean_char_len;
    return j;
}

}  // namespace

TextStats text_stats(std::span<const std::string> guidances) {
    TextStats out;
    out.n = guidances.size();
    if (out.n == 0) return out;
    std::size_t words = 0, chars = 0;
    for (const auto& g : guidances) {
        words += word_count(g);
        chars += g.size();
    }
    out.mean_word_len = static_cast<double>(words) / static_cast<double>(out.n);
    out.mean_char_len = static_cast<double>(chars) / static_cast<double>(out.n);
    return out;
}

CountTable manifest_stats(const PairManifest& pairs) {
    CountTable table;
    std::map<std::pair<Task, SourceDataset>, std::set<std::string>> originals;
    for (const auto& p : pairs.records) {
        const auto key = std::make_pair(p.task, p.good.image.source_dataset);
        ++table[key].pairs;
        originals[key].insert(p.good.image.image_id);
    }
    for (auto& [key, row] : table) row.originals = originals[key].size();
    return table;
}

OrderedJson stats_report(const PairManifest& pairs) {
    OrderedJson report;
    OrderedJson rows = OrderedJson::array();
    std::size_t total = 0;
    for (const auto& [key, row] : manifest_stats(pairs)) {
        OrderedJson r;
        r["task"] = to_string(key.first);
        r["source_dataset"] = to_string(key.second);
        r["pairs"] = row.pairs;
        r["originals"] = row.originals;
        rows.push_back(std::move(r));
        total += row.pairs;
    }
    report["counts"] = std::move(rows);
    report["total_pairs"] = total;

    std::map<Task, std::vector<std::string>> texts;
    for (const auto& p : pairs.records)
        if (p.text_guidance) texts[p.task].push_back(*p.text_guidance);
    OrderedJson text = OrderedJson::object();
    for (const auto& [task, list] : texts) text[std::string(to_string(task))] = to_json(text_stats(list));
    report["text_guidance"] = std::move(text);
    return report;
}

}  // namespace compforge::stats
