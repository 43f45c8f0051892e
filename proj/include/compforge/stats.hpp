#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "compforge/manifest.hpp"

namespace compforge::stats {

struct TextStats {
    double mean_word_len = 0.0;  // whitespace-separated tokens
    double mean_char_len = 0.0;  // bytes
    std::size_t n = 0;
};

TextStats text_stats(std::span<const std::string> guidances);

struct CountRow {
    std::size_t pairs = 0;
    std::size_t originals = 0;  // distinct good-side image ids
};

/// Pair counts keyed by (task, source dataset of the good side).
using CountTable = std::map<std::pair<Task, SourceDataset>, CountRow>;

CountTable manifest_stats(const PairManifest& pairs);

/// counts table, totals, and per-task guidance length statistics.
OrderedJson stats_report(const PairManifest& pairs);

}  // namespace compforge::stats
