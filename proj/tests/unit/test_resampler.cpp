#include <doctest.h>

#include <numeric>
#include <random>

#include "compforge/error.hpp"
#include "compforge/resampler.hpp"

using namespace compforge;
using namespace compforge::resample;

namespace {

std::vector<double> scores_with_counts(const std::vector<std::size_t>& counts, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> out;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        std::uniform_real_distribution<double> u(1.0 + k, 1.999 + k);
        for (std::size_t i = 0; i < counts[k]; ++i) out.push_back(u(rng));
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

}  // namespace

TEST_CASE("range membership") {
    const StrataSpec spec{{1, 2, 3, 4, 5}, {0, 0, 0, 0}};
    CHECK(range_of(1.0, spec) == 0u);
    CHECK(range_of(1.999, spec) == 0u);
    CHECK(range_of(2.0, spec) == 1u);
    CHECK(range_of(5.0, spec) == 3u);  // last range is closed
    CHECK_FALSE(range_of(5.01, spec));
    CHECK_FALSE(range_of(0.99, spec));
    const std::vector<double> bad{3.0, 7.0};
    CHECK_THROWS_AS(range_counts(bad, spec), ValidationError);
}

TEST_CASE("exact counts per range and seed determinism") {
    const std::vector<std::size_t> avail{30, 400, 250, 12};
    const auto scores = scores_with_counts(avail, 1);
    const StrataSpec spec{{1, 2, 3, 4, 5}, {30, 100, 77, 12}};
    const auto a = stratified_select(scores, spec, 99);
    const auto b = stratified_select(scores, spec, 99);
    const auto c = stratified_select(scores, spec, 100);
    CHECK(a == b);
    CHECK(a != c);
    CHECK(std::is_sorted(a.begin(), a.end()));
    std::vector<double> picked;
    for (auto i : a) picked.push_back(scores[i]);
    CHECK(range_counts(picked, spec) == spec.target_counts);
    CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());
}

TEST_CASE("equal targets return everything") {
    const std::vector<std::size_t> avail{5, 6, 7, 8};
    const auto scores = scores_with_counts(avail, 2);
    const auto idx = stratified_select(scores, StrataSpec{{1, 2, 3, 4, 5}, avail}, 1);
    std::vector<std::size_t> all(scores.size());
    std::iota(all.begin(), all.end(), 0);
    CHECK(idx == all);
}

TEST_CASE("over-asking names the range") {
    const auto scores = scores_with_counts({5, 6, 7, 8}, 3);
    try {
        stratified_select(scores, StrataSpec{{1, 2, 3, 4, 5}, {5, 7, 7, 8}}, 1);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("[2,3)") != std::string::npos);
    }
}

TEST_CASE("selection is roughly uniform inside a range") {
    std::vector<double> scores(10, 1.5);
    std::vector<int> hits(10, 0);
    for (std::uint64_t s = 0; s < 2000; ++s)
        for (auto i : stratified_select(scores, StrataSpec{{1, 2}, {3}}, s)) ++hits[i];
    for (int h : hits) CHECK(std::abs(h - 600) < 90);
}

TEST_CASE("template wrapper and json") {
    struct Rec {
        std::string id;
        double s;
    };
    const std::vector<Rec> recs{{"a", 1.2}, {"b", 2.5}, {"c", 2.6}, {"d", 4.5}};
    const auto out = stratified_resample(recs, StrataSpec{{1, 2, 3, 4, 5}, {1, 1, 0, 1}}, 5,
                                         [](const Rec& r) { return r.s; });
    REQUIRE(out.size() == 3);
    CHECK(out[0].id == "a");
    CHECK(out[2].id == "d");

    const auto spec = strata_from_json(Json::parse(R"({"target_counts":[1,2,3,4]})"));
    CHECK(spec.boundaries.size() == 5);
    CHECK(to_json(spec).dump() == R"({"boundaries":[1.0,2.0,3.0,4.0,5.0],"target_counts":[1,2,3,4]})");
    CHECK_THROWS_AS(strata_from_json(Json::parse(R"({"target_counts":[1]})")), ConfigError);
    CHECK_THROWS_AS(strata_from_json(Json::parse(R"({"boundaries":[1,1],"target_counts":[1]})")), ConfigError);
    CHECK_THROWS_AS(strata_from_json(Json::parse(R"({"target_counts":[1,2,3,4],"x":1})")), ConfigError);
}
