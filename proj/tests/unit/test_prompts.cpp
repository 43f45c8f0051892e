#include <doctest.h>

#include <map>

#include "compforge/error.hpp"
#include "compforge/prompts.hpp"
#include "corpus.hpp"

using namespace compforge;
using namespace compforge::prompts;

TEST_CASE("defaults are complete and valid") {
    const auto set = PromptTemplateSet::defaults();
    CHECK_NOTHROW(set.validate());
    for (PromptKind k : kAllPromptKinds) CHECK_FALSE(set.templates(k).empty());
    CHECK(prompt_kind(Task::ZoomIn) == PromptKind::ZoomIn);
    for (PromptKind k : kAllPromptKinds) CHECK(parse_prompt_kind(to_string(k)) == k);
}

TEST_CASE("a single template is always chosen") {
    const auto set = PromptTemplateSet::defaults();
    for (int i = 0; i < 50; ++i)
        CHECK(sample_prompt(PromptKind::Shift, set, i, "p" + std::to_string(i)) == set.templates(PromptKind::Shift)[0]);
}

TEST_CASE("two templates split evenly and deterministically") {
    const auto set = PromptTemplateSet::defaults();
    std::map<std::string, int> seen;
    for (int i = 0; i < 1000; ++i) ++seen[sample_prompt(PromptKind::StaticAuto, set, 7, "pair" + std::to_string(i))];
    REQUIRE(seen.size() == 2);
    for (const auto& [t, n] : seen) CHECK(std::abs(n - 500) <= 60);
    CHECK(sample_prompt(PromptKind::StaticAuto, set, 7, "x") == sample_prompt(PromptKind::StaticAuto, set, 7, "x"));
}

TEST_CASE("loading from JSON") {
    Json j = Json::object();
    for (PromptKind k : kAllPromptKinds) j[std::string(to_string(k))] = {"Do " + std::string(to_string(k))};
    const auto set = PromptTemplateSet::from_json(j);
    CHECK(set.templates(PromptKind::FullAuto)[0] == "Do full_auto");

    testsupport::TempDir dir;
    testsupport::spit(dir / "t.json", j.dump());
    CHECK(PromptTemplateSet::load(dir / "t.json").templates(PromptKind::Shift)[0] == "Do shift");

    auto missing = j;
    missing.erase("degradation");
    CHECK_THROWS_AS(PromptTemplateSet::from_json(missing), ConfigError);
    auto extra = j;
    extra["rotate"] = {"x"};
    CHECK_THROWS_AS(PromptTemplateSet::from_json(extra), ConfigError);
    auto empty = j;
    empty["shift"] = Json::array();
    CHECK_THROWS_AS(PromptTemplateSet::from_json(empty), ConfigError);
    auto placeholder = j;
    placeholder["shift"] = {"Move the {subject}"};
    CHECK_THROWS_AS(PromptTemplateSet::from_json(placeholder), ConfigError);
}
