#include "compforge/resampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "compforge/error.hpp"
#include "compforge/seeding.hpp"

namespace compforge::resample {

namespace {

std::string range_name(const StrataSpec& spec, std::size_t k) {
    std::ostringstream os;
    const bool last = k + 1 == spec.n_ranges();
    os << '[' << spec.boundaries[k] << ',' << spec.boundaries[k + 1] << (last ? ']' : ')');
    return os.str();
}

}  // namespace

void StrataSpec::validate() const {
    if (boundaries.size() < 2) throw ConfigError("strata need at least two boundaries");
    for (std::size_t i = 1; i < boundaries.size(); ++i)
        if (!(boundaries[i] > boundaries[i - 1])) throw ConfigError("strata boundaries must be strictly ascending");
    if (target_counts.size() != n_ranges())
        throw ConfigError("strata need one target count per range (" + std::to_string(n_ranges()) + ")");
}

std::optional<std::size_t> range_of(double score, const StrataSpec& spec) {
    const auto& b = spec.boundaries;
    if (!std::isfinite(score) || b.size() < 2 || score < b.front() || score > b.back()) return std::nullopt;
    if (score == b.back()) return b.size() - 2;
    const auto it = std::upper_bound(b.begin(), b.end(), score);
    return static_cast<std::size_t>(it - b.begin()) - 1;
}

std::vector<std::size_t> range_counts(std::span<const double> scores, const StrataSpec& spec) {
    std::vector<std::size_t> counts(spec.n_ranges(), 0);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto k = range_of(scores[i], spec);
        if (!k) throw ValidationError("record " + std::to_string(i) + " has score outside every range");
        ++counts[*k];
    }
    return counts;
}

std::vector<std::size_t> stratified_select(std::span<const double> scores, const StrataSpec& spec,
                                           std::uint64_t seed) {
    spec.validate();
    std::vector<std::vector<std::size_t>> members(spec.n_ranges());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto k = range_of(scores[i], spec);
        if (!k) throw ValidationError("record " + std::to_string(i) + " has score outside every range");
        members[*k].push_back(i);
    }

    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < members.size(); ++k) {
        auto& pool = members[k];
        const std::size_t target = spec.target_counts[k];
        if (target > pool.size()) {
            throw ValidationError("range " + range_name(spec, k) + ": target " + std::to_string(target) +
                                  " exceeds the " + std::to_string(pool.size()) + " available records");
        }
        if (target < pool.size()) {
            Rng rng = make_rng(seed, "strata:" + std::to_string(k));
            for (std::size_t i = 0; i < target; ++i) {
                const std::size_t j = i + uniform_below(rng, pool.size() - i);
                std::swap(pool[i], pool[j]);
            }
            pool.resize(target);
        }
        out.insert(out.end(), pool.begin(), pool.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

StrataSpec strata_from_json(const Json& obj) {
    if (!obj.is_object()) throw ConfigError("strata spec must be a JSON object");
    FieldReader f(obj, 0);
    StrataSpec spec;
    try {
        if (auto b = f.optional<std::vector<double>>("boundaries")) spec.boundaries = *b;
        spec.target_counts = f.required<std::vector<std::size_t>>("target_counts");
        f.finish();
    } catch (const ParseError& e) {
        throw ConfigError(std::string("strata spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

OrderedJson to_json(const StrataSpec& spec) {
    OrderedJson j;
    j["boundaries"] = spec.boundaries;
    j["target_counts"] = spec.target_counts;
    return j;
}

}  // namespace compforge::resample
