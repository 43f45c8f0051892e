#include <doctest.h>

#include "compforge/config.hpp"
#include "corpus.hpp"

using namespace compforge;

TEST_CASE("empty object gives the defaults") {
    const auto cfg = config_from_json(Json::object());
    CHECK(cfg.seed == 0);
    CHECK(cfg.filter.clip_sim_min == 0.8);
    CHECK(cfg.shift.good_min == 4.0);
    CHECK(cfg.grpo.kl_beta == 0.04);
    CHECK_FALSE(cfg.strata);
    CHECK(cfg.eval.excluded.size() == 1);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("overrides reach every section") {
    const auto cfg = config_from_json(Json::parse(R"({
        "seed": 42,
        "solver": {"alpha": 3.0, "lbfgs": {"max_iter": 7}, "adam": {"lr": 0.5}},
        "bins": {"n_bins": 8},
        "shift": {"score_gap_min": 1.0},
        "zoom": {"max_area_ratio": 0.5},
        "view": {"n_best": 2, "n_worst": 2},
        "filter": {"clip_sim_min": 0.7, "disabled": ["keywords", "fov_overlap"], "banned_keywords": ["sketch"]},
        "grpo": {"score_tol": 0.3},
        "strata": {"target_counts": [1, 2, 3, 4]},
        "eval": {"excluded": []}
    })"));
    CHECK(cfg.seed == 42);
    CHECK(cfg.solver.alpha == 3.0);
    CHECK(cfg.solver.lbfgs.max_iter == 7);
    CHECK(cfg.solver.adam.lr == 0.5);
    CHECK(cfg.bins.n_bins == 8);
    CHECK(cfg.shift.score_gap_min == 1.0);
    CHECK(cfg.zoom.max_area_ratio == 0.5);
    CHECK(cfg.view.n_best == 2);
    CHECK(cfg.filter.clip_sim_min == 0.7);
    CHECK_FALSE(cfg.filter.enabled(filter::Stage::Keywords));
    CHECK(cfg.filter.banned_keywords == std::vector<std::string>{"sketch"});
    CHECK(cfg.grpo.score_tol == 0.3);
    REQUIRE(cfg.strata);
    CHECK(cfg.strata->target_counts.size() == 4);
    CHECK(cfg.eval.excluded.empty());
}

TEST_CASE("round trip through JSON") {
    auto cfg = config_from_json(Json::parse(R"({"seed": 9, "filter": {"disabled": ["aspect"]}})"));
    const auto again = config_from_json(Json::parse(to_json(cfg).dump()));
    CHECK(to_json(again).dump() == to_json(cfg).dump());
}

TEST_CASE("bad configs are rejected") {
    for (const char* text : {
             R"({"sed": 1})",
             R"({"solver": {"alpah": 1}})",
             R"({"solver": {"lbfgs": {"lr": -1}}})",
             R"({"filter": {"disabled": ["nope"]}})",
             R"({"filter": {"clip_sim_min": 2}})",
             R"({"eval": {"excluded": ["zoom_in"]}})",
             R"({"eval": {"excluded": ["zoom_in/vs_nothing"]}})",
             R"({"seed": "x"})",
             R"({"strata": {"target_counts": [1]}})",
             R"([])",
         }) {
        INFO(text);
        CHECK_THROWS_AS(config_from_json(Json::parse(text)), ConfigError);
    }
}

TEST_CASE("template file is resolved against the config directory") {
    testsupport::TempDir dir;
    Json t = Json::object();
    for (auto k : prompts::kAllPromptKinds) t[std::string(prompts::to_string(k))] = {"custom"};
    testsupport::spit(dir / "templates.json", t.dump());
    testsupport::spit(dir / "pipeline.json", R"({"templates": "templates.json"})");
    const auto cfg = load_config(dir / "pipeline.json");
    CHECK(cfg.templates().templates(prompts::PromptKind::Shift)[0] == "custom");

    testsupport::spit(dir / "bad.json", "{not json");
    CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
    CHECK_THROWS(load_config(dir / "missing.json"));
}

TEST_CASE("shipped example config matches the defaults") {
    const auto cfg = load_config(COMPFORGE_EXAMPLE_CONFIG);
    CHECK(to_json(cfg).dump() == to_json(PipelineConfig{}).dump());
}
