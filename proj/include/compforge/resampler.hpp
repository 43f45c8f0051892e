#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "compforge/jsonl.hpp"

namespace compforge::resample {

/// Score ranges [b_k, b_{k+1}), the last one closed, with a target count each.
struct StrataSpec {
    std::vector<double> boundaries{1.0, 2.0, 3.0, 4.0, 5.0};
    std::vector<std::size_t> target_counts;

    std::size_t n_ranges() const { return boundaries.empty() ? 0 : boundaries.size() - 1; }
    void validate() const;
};

/// Range index holding `score`, or nullopt outside all ranges.
std::optional<std::size_t> range_of(double score, const StrataSpec& spec);

/// Per-range record counts. Throws ValidationError for a score outside every range.
std::vector<std::size_t> range_counts(std::span<const double> scores, const StrataSpec& spec);

/// Indices (ascending) of a seeded uniform sample without replacement of
/// target_counts[k] records from every range k. Ranges whose target equals
/// their size are kept whole. Throws ValidationError naming the range when a
/// target exceeds what is available.
std::vector<std::size_t> stratified_select(std::span<const double> scores, const StrataSpec& spec,
                                           std::uint64_t seed);

template <typename Record, typename ScoreFn>
std::vector<Record> stratified_resample(const std::vector<Record>& records, const StrataSpec& spec,
                                        std::uint64_t seed, ScoreFn score_of) {
    std::vector<double> scores;
    scores.reserve(records.size());
    for (const auto& r : records) scores.push_back(score_of(r));
    std::vector<Record> out;
    for (std::size_t i : stratified_select(scores, spec, seed)) out.push_back(records[i]);
    return out;
}

StrataSpec strata_from_json(const Json& obj);
OrderedJson to_json(const StrataSpec& spec);

}  // namespace compforge::resample
