#include <doctest.h>

#include <random>

#include "compforge/filter_chain.hpp"
#include "filter_fixture.hpp"

using namespace compforge::filter;
using compforge::ConfigError;
using compforge::DomainError;
using compforge::PairManifest;
using compforge::ParseError;
using compforge::ValidationError;
using testsupport::filter_fixture;

TEST_CASE("fixture: each pair stops at its expected stage") {
    const auto cases = filter_fixture();
    REQUIRE(cases.size() == 12);
    const auto res = run_chain(testsupport::fixture_manifest(cases), testsupport::fixture_sidecar(cases), {});
    REQUIRE(res.reports.size() == cases.size());
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& r = res.reports[i];
        INFO(r.pair_id);
        CHECK(r.pair_id == cases[i].pair.pair_id);
        CHECK(r.pass == !cases[i].expect_fail);
        CHECK(r.failed_stage == cases[i].expect_fail);
        if (cases[i].expect_measured) {
            REQUIRE(r.measured_value);
            CHECK(*r.measured_value == doctest::Approx(*cases[i].expect_measured).epsilon(1e-12));
        }
    }
    REQUIRE(res.passed.records.size() == 1);
    CHECK(res.passed.records[0].good.image.image_id == "z_edge");
}

TEST_CASE("single-stage predicates") {
    const auto cases = filter_fixture();
    const FilterConfig cfg;
    const auto& clip = cases[1];
    CHECK_FALSE(stage_eval(clip.pair, &*clip.row, cfg, Stage::ClipSim).pass);
    CHECK(stage_eval(clip.pair, &*clip.row, cfg, Stage::SubjectSim).pass);

    ScoresSidecar row = *clip.row;
    row.contain_flag = false;
    row.contain_area_ratio.reset();
    CHECK(stage_eval(clip.pair, &row, cfg, Stage::Containment).pass);
    row.contain_flag = true;
    CHECK_THROWS_AS(stage_eval(clip.pair, &row, cfg, Stage::Containment), ValidationError);

    CHECK_THROWS_AS(stage_eval(clip.pair, &row, cfg, Stage::ByteSize), DomainError);
    CHECK_THROWS_AS(stage_eval(clip.pair, nullptr, cfg, Stage::ClipSim), ValidationError);
}

TEST_CASE("keyword matching is whole-word and case-insensitive") {
    const std::vector<std::string> banned{"abstract", "painting", "art"};
    CHECK(has_banned_keyword({"Painting"}, banned));
    CHECK(has_banned_keyword({"street", "street-art"}, banned));
    CHECK_FALSE(has_banned_keyword({"party", "smartphone", "artist"}, banned));
    CHECK_FALSE(has_banned_keyword({}, banned));
}

TEST_CASE("missing sidecar row names the pair") {
    const auto cases = filter_fixture();
    auto idx = testsupport::fixture_sidecar(cases);
    idx.erase(cases[2].pair.pair_id);
    try {
        run_chain(testsupport::fixture_manifest(cases), idx, {});
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find(cases[2].pair.pair_id) != std::string::npos);
    }
}

TEST_CASE("zoom pairs need no sidecar") {
    const auto cases = filter_fixture();
    PairManifest m{{cases[5].pair, cases[6].pair}};
    const auto res = run_chain(m, {}, {});
    CHECK(res.passed.records.size() == 1);
}

TEST_CASE("disabling a stage never turns a pass into a fail") {
    const auto cases = filter_fixture();
    const auto m = testsupport::fixture_manifest(cases);
    const auto idx = testsupport::fixture_sidecar(cases);
    const auto base = run_chain(m, idx, {});
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        FilterConfig cfg;
        for (Stage s : kStageOrder)
            if (rng() % 3 == 0) cfg.disabled.insert(s);
        const auto res = run_chain(m, idx, cfg);
        std::size_t pass = 0;
        for (std::size_t i = 0; i < m.records.size(); ++i) {
            if (base.reports[i].pass) REQUIRE(res.reports[i].pass);
            if (res.reports[i].failed_stage) REQUIRE(cfg.enabled(*res.reports[i].failed_stage));
            pass += res.reports[i].pass;
        }
        // reports partition the input
        REQUIRE(res.reports.size() == m.records.size());
        REQUIRE(res.passed.records.size() == pass);
    }
}

TEST_CASE("disabling the failing stage moves the pair on") {
    const auto cases = filter_fixture();
    FilterConfig cfg;
    cfg.disabled = {Stage::ClipSim};
    const auto res = run_chain(PairManifest{{cases[1].pair}}, testsupport::fixture_sidecar(cases), cfg);
    CHECK(res.reports[0].pass);
}

TEST_CASE("sidecar parsing") {
    const auto idx = parse_sidecar(
        "{\"_meta\":{\"producer\":\"x\"}}\n"
        "{\"pair_id\":\"p\",\"clip_sim\":0.9,\"contain_flag\":false}\n");
    REQUIRE(idx.size() == 1);
    CHECK(*idx.at("p").clip_sim == 0.9);
    CHECK_FALSE(idx.at("p").subject_sim);
    CHECK(to_json(idx.at("p")).dump() == R"({"pair_id":"p","clip_sim":0.9,"contain_flag":false})");

    CHECK_THROWS_AS(parse_sidecar("{\"pair_id\":\"p\",\"clip_sim\":1.5}\n"), ValidationError);
    CHECK_THROWS_AS(parse_sidecar("{\"pair_id\":\"p\",\"contain_area_ratio\":0}\n"), ValidationError);
    CHECK_THROWS_AS(parse_sidecar("{\"pair_id\":\"p\",\"bogus\":1}\n"), ParseError);
    CHECK_THROWS_AS(parse_sidecar("{\"pair_id\":\"p\"}\n{\"pair_id\":\"p\"}\n"), ValidationError);
}

TEST_CASE("report wire form") {
    FilterReport r{"x", false, Stage::ClipSim, 0.79};
    CHECK(to_json(r).dump() == R"({"pair_id":"x","verdict":"fail","failed_stage":"clip_sim","measured_value":0.79})");
    CHECK(to_json(FilterReport{"y"}).dump() == R"({"pair_id":"y","verdict":"pass"})");
}

TEST_CASE("stage names and config checks") {
    for (Stage s : kStageOrder) CHECK(parse_stage(to_string(s)) == s);
    CHECK_THROWS_AS(parse_stage("nope"), ConfigError);
    FilterConfig cfg;
    cfg.clip_sim_min = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
