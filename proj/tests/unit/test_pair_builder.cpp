#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "compforge/geometry.hpp"
#include "compforge/pair_builder.hpp"
#include "oracles.hpp"

using namespace compforge;
using namespace compforge::pairs;

namespace {

ImageRef image(const std::string& id, int w = 1000, int h = 1000) {
    ImageRef r;
    r.image_id = id;
    r.source_dataset = SourceDataset::Gaic;
    r.width_px = w;
    r.height_px = h;
    r.byte_size = 300000;
    return r;
}

CropRecord crop(const std::string& image_id, int i, CropRect rect, std::optional<double> score) {
    CropRecord c;
    c.image_id = image_id;
    c.crop_id = image_id + "_c" + (i < 10 ? "0" : "") + std::to_string(i);
    c.rect = rect;
    c.score = score;
    return c;
}

/// Crops of one shape (400x300) at distinct offsets, one per score.
CropManifest same_bin_crops(const std::string& image_id, const std::vector<double>& scores) {
    CropManifest m;
    for (std::size_t i = 0; i < scores.size(); ++i)
        m.records.push_back(crop(image_id, static_cast<int>(i), {static_cast<int>(i) * 10, 0, 400, 300}, scores[i]));
    normalize(m);
    return m;
}

ImageManifest images_of(std::initializer_list<ImageRef> list) {
    ImageManifest m{list};
    normalize(m);
    return m;
}

}  // namespace

TEST_CASE("aspect bins") {
    const AspectBinning b;
    CHECK(bin_aspect(0.45, b) == 0);
    CHECK(bin_aspect(2.2, b) == 10);
    CHECK(bin_aspect(1.0, b) == 5);
    CHECK_FALSE(bin_aspect(0.449, b).has_value());
    CHECK_FALSE(bin_aspect(2.21, b).has_value());
    CHECK_THROWS_AS(bin_aspect(0.0, b), DomainError);
    CHECK_THROWS_AS(bin_aspect(-1.0, b), DomainError);

    // every center maps to itself; points just either side of a midpoint split
    for (int k = 0; k < 11; ++k) CHECK(bin_aspect(b.center(k), b) == k);
    for (int k = 0; k < 10; ++k) {
        const double mid = std::sqrt(b.center(k) * b.center(k + 1));  // log-space midpoint
        CHECK(bin_aspect(mid * (1 - 1e-9), b) == k);
        CHECK(bin_aspect(mid * (1 + 1e-9), b) == k + 1);
    }
    CHECK(b.center(0) == doctest::Approx(0.45));
    CHECK(b.center(10) == doctest::Approx(2.2));
}

TEST_CASE("shift: minimal pair and the gap rule") {
    const auto imgs = images_of({image("a")});
    auto pairs = build_shift_pairs(imgs, same_bin_crops("a", {4.5, 1.5}), {}, {}, {});
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].pair_id == "shift:a_c01:a_c00");
    CHECK(pairs[0].task == Task::Shift);
    CHECK(pairs[0].good.crop->x == 0);
    CHECK(std::abs(pairs[0].rotation_deg) <= 5.0);
    CHECK(pairs[0].task_prompt == "Shift the scene to enhance the composition.");
    CHECK(pairs[0].provenance.rfind("build_shift_pairs@", 0) == 0);

    // 4.2 vs a mid crop of 3.6 would be a 0.6 gap; with every mid crop drawn it is still dropped
    ShiftConfig all_mid;
    all_mid.mid_score_fraction = 1.0;
    CHECK(build_shift_pairs(imgs, same_bin_crops("a", {4.2, 3.6}), all_mid, {}, {}).empty());
    // exactly 0.8 apart is kept
    CHECK(build_shift_pairs(imgs, same_bin_crops("a", {4.8, 4.0}), all_mid, {}, {}).size() == 1);
}

TEST_CASE("shift: thresholds are strict") {
    const auto imgs = images_of({image("a")});
    // 4.0 is not good, 2.0 is not poor (and no mid crop is sampled at fraction 0)
    ShiftConfig no_mid;
    no_mid.mid_score_fraction = 0.0;
    CHECK(build_shift_pairs(imgs, same_bin_crops("a", {4.0, 1.0}), no_mid, {}, {}).empty());
    CHECK(build_shift_pairs(imgs, same_bin_crops("a", {5.0, 2.0}), no_mid, {}, {}).empty());
    CHECK(build_shift_pairs(imgs, same_bin_crops("a", {4.01, 1.99}), no_mid, {}, {}).size() == 1);
}

TEST_CASE("shift: 3 good, 2 poor, 10 mid gives 9 pairs") {
    const auto imgs = images_of({image("a")});
    const std::vector<double> scores{4.5, 4.6, 4.7, 1.5, 1.6, 2.0, 2.2, 2.4, 2.6, 2.8, 3.0, 3.2, 3.4, 3.5, 3.6};
    const auto crops = same_bin_crops("a", scores);
    BuildContext ctx;
    ctx.seed = 99;
    const auto first = build_shift_pairs(imgs, crops, {}, {}, ctx);
    CHECK(first.size() == 9);
    CHECK(build_shift_pairs(imgs, crops, {}, {}, ctx) == first);

    // exactly one poor side is a mid crop, and it is the same one for every good crop
    std::set<std::string> poor_sides;
    for (const auto& p : first) poor_sides.insert(p.poor.key());
    CHECK(poor_sides.size() == 3);

    // across seeds the mid pick varies
    std::set<std::string> picks;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        ctx.seed = seed;
        for (const auto& p : build_shift_pairs(imgs, crops, {}, {}, ctx)) picks.insert(p.poor.key());
    }
    CHECK(picks.size() > 4);
}

TEST_CASE("shift: crops in different bins never pair") {
    const auto imgs = images_of({image("a")});
    CropManifest crops;
    crops.records.push_back(crop("a", 0, {0, 0, 400, 300}, 4.5));  // 1.33
    crops.records.push_back(crop("a", 1, {0, 0, 300, 400}, 1.5));  // 0.75
    crops.records.push_back(crop("a", 2, {0, 0, 100, 90}, 1.5));   // 1.11
    normalize(crops);
    CHECK(build_shift_pairs(imgs, crops, {}, {}, {}).empty());
}

TEST_CASE("shift: property checks on random manifests") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> score(1, 5);
    ImageManifest imgs;
    CropManifest crops;
    const std::vector<std::pair<int, int>> shapes{{400, 300}, {300, 400}, {300, 300}, {600, 300}, {200, 300}};
    for (int i = 0; i < 10; ++i) {
        const std::string id = "im" + std::to_string(i);
        imgs.records.push_back(image(id));
        for (int c = 0; c < 20; ++c) {
            const auto [w, h] = shapes[rng() % shapes.size()];
            crops.records.push_back(crop(id, c, {static_cast<int>(rng() % 300), static_cast<int>(rng() % 300), w, h},
                                         std::round(score(rng) * 100) / 100));
        }
    }
    normalize(imgs);
    normalize(crops);
    const auto pairs = build_shift_pairs(imgs, crops, {}, {}, {});
    REQUIRE_FALSE(pairs.empty());
    const AspectBinning bins;
    std::map<std::string, double> score_of;
    for (const auto& c : crops.records) score_of[c.crop_id] = *c.score;
    for (const auto& p : pairs) {
        REQUIRE(bin_aspect(p.poor.aspect(), bins) == bin_aspect(p.good.aspect(), bins));
        REQUIRE(p.poor.image.image_id == p.good.image.image_id);
        // pair id is shift:<poor crop id>:<good crop id>
        const auto first = p.pair_id.find(':'), second = p.pair_id.rfind(':');
        const double gs = score_of.at(p.pair_id.substr(second + 1));
        const double ps = score_of.at(p.pair_id.substr(first + 1, second - first - 1));
        REQUIRE(gs > 4.0);
        REQUIRE(gs - ps >= 0.8 - 1e-9);
        REQUIRE(std::abs(p.rotation_deg) <= 5.0);
        REQUIRE_NOTHROW(validate(p));
    }
}

TEST_CASE("shift: input errors") {
    const auto imgs = images_of({image("a")});
    CHECK_THROWS_AS(build_shift_pairs(imgs, same_bin_crops("a", {4.5, std::nan("")}), {}, {}, {}), ValidationError);
    auto unscored = same_bin_crops("a", {4.5, 1.0});
    unscored.records[1].score.reset();
    CHECK_THROWS_AS(build_shift_pairs(imgs, unscored, {}, {}, {}), ValidationError);
    CHECK_THROWS_AS(build_shift_pairs(imgs, same_bin_crops("b", {4.5, 1.0}), {}, {}, {}), ValidationError);
    ShiftConfig bad;
    bad.poor_max = 4.5;
    CHECK_THROWS_AS(build_shift_pairs(imgs, same_bin_crops("a", {4.5}), bad, {}, {}), ConfigError);
}

TEST_CASE("zoom: area ratio threshold") {
    // 1000x1000 parent and square crops: the containing frame is the full image
    const auto imgs = images_of({image("a")});
    auto square = [](int side) {
        CropManifest m;
        m.records.push_back(crop("a", 0, {0, 0, side, side}, 4.5));
        return m;
    };
    // 768^2 / 1000^2 = 0.589824, 782^2 / 1000^2 = 0.611524
    CHECK(build_zoom_pairs(imgs, square(768), {}, {}).size() == 1);
    CHECK(build_zoom_pairs(imgs, square(782), {}, {}).empty());
}

TEST_CASE("zoom: exactly at the cap passes") {
    // 3x1 crop in a 5x1 parent: the frame is the whole parent, ratio 3/5
    const auto imgs = images_of({image("t", 5, 1)});
    CropManifest m;
    m.records.push_back(crop("t", 0, {1, 0, 3, 1}, 4.5));
    CHECK(build_zoom_pairs(imgs, m, {}, {}).size() == 1);
    ZoomConfig tight;
    tight.max_area_ratio = 0.59;
    CHECK(build_zoom_pairs(imgs, m, tight, {}).empty());
}

TEST_CASE("zoom: 5 originals x 2 crops against the brute-force frame") {
    std::mt19937_64 rng(8);
    ImageManifest imgs;
    CropManifest crops;
    for (int i = 0; i < 5; ++i) {
        const std::string id = "o" + std::to_string(i);
        const int W = 40 + static_cast<int>(rng() % 25), H = 40 + static_cast<int>(rng() % 25);
        imgs.records.push_back(image(id, W, H));
        for (int c = 0; c < 2; ++c) {
            const int w = 8 + static_cast<int>(rng() % 12), h = 8 + static_cast<int>(rng() % 12);
            auto cr = crop(id, c, {static_cast<int>(rng() % (W - w + 1)), static_cast<int>(rng() % (H - h + 1)), w, h},
                           std::nullopt);
            cr.best_label = true;
            crops.records.push_back(cr);
        }
    }
    normalize(imgs);
    normalize(crops);
    const auto pairs = build_zoom_pairs(imgs, crops, {}, {});
    REQUIRE(pairs.size() == 10);
    for (const auto& p : pairs) {
        const auto& parent = p.good.image;
        const auto want = oracle::brute_containing_crop(parent.width_px, parent.height_px, *p.good.crop);
        const CropRect got = p.poor.crop.value_or(CropRect{0, 0, parent.width_px, parent.height_px});
        CHECK(got == want);
        CHECK(static_cast<double>(p.good.area()) / static_cast<double>(p.poor.area()) <= 0.6);
        CHECK(p.pair_id.rfind("zoom_in:" + parent.image_id + ":", 0) == 0);
        CHECK(p.rotation_deg == 0.0);
    }
}

TEST_CASE("zoom: qualification") {
    const auto imgs = images_of({image("a")});
    CropManifest m;
    m.records.push_back(crop("a", 0, {0, 0, 300, 300}, 4.0));   // not above 4.0
    m.records.push_back(crop("a", 1, {0, 0, 310, 310}, std::nullopt));  // no score, no label
    m.records.push_back(crop("a", 2, {0, 0, 320, 320}, 4.01));
    normalize(m);
    const auto pairs = build_zoom_pairs(imgs, m, {}, {});
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].pair_id == "zoom_in:a:a_c02");
    CHECK_FALSE(pairs[0].poor.crop.has_value());  // frame is the whole image
}

TEST_CASE("view selection counts") {
    ImageManifest imgs;
    std::vector<SceneScore> scores;
    auto add_scene = [&](const std::string& scene, int k) {
        for (int i = 0; i < k; ++i) {
            const std::string id = scene + "_" + std::to_string(i);
            imgs.records.push_back(image(id));
            scores.push_back({scene, id, 1.0 + 4.0 * i / std::max(1, k - 1)});
        }
    };
    add_scene("big", 20);
    add_scene("two", 2);
    add_scene("one", 1);
    add_scene("five", 5);
    normalize(imgs);

    const auto sel = select_view_pairs(scores, imgs, {}, {});
    std::map<std::string, int> per_scene;
    for (const auto& p : sel.pairs) {
        ++per_scene[p.good.image.image_id.substr(0, p.good.image.image_id.find('_'))];
        CHECK(p.task == Task::ViewChange);
        CHECK_FALSE(p.good.crop.has_value());
    }
    CHECK(per_scene["big"] == 30);
    CHECK(per_scene["two"] == 1);
    CHECK(per_scene["five"] == 2 * 3);  // best min(3, 5/2 = 2), worst min(10, 3)
    CHECK(per_scene.count("one") == 0);
    REQUIRE(sel.warnings.size() == 1);
    CHECK(sel.warnings[0].find("one") != std::string::npos);

    // best and worst are disjoint, and best really are the top scores
    for (const auto& p : sel.pairs) CHECK(p.good.image.image_id != p.poor.image.image_id);
    for (const auto& p : sel.pairs)
        if (p.good.image.image_id.rfind("big_", 0) == 0) {
            const int g = std::stoi(p.good.image.image_id.substr(4)), w = std::stoi(p.poor.image.image_id.substr(4));
            CHECK(g >= 17);
            CHECK(w <= 9);
        }
}

TEST_CASE("view selection errors") {
    const auto imgs = images_of({image("a"), image("b")});
    CHECK_THROWS_AS(select_view_pairs({{"s", "a", 0.5}, {"s", "b", 3}}, imgs, {}, {}), ValidationError);
    CHECK_THROWS_AS(select_view_pairs({{"s", "a", 2}, {"s", "zz", 3}}, imgs, {}, {}), ValidationError);
}

TEST_CASE("attach_scores joins on crop_index") {
    CropManifest m;
    auto c0 = crop("a", 0, {0, 0, 10, 10}, std::nullopt);
    c0.crop_index = 1;
    auto c1 = crop("a", 1, {0, 0, 10, 10}, std::nullopt);  // no index: untouched
    m.records = {c0, c1};
    scores::ScoresRecord r;
    r.image_id = "a";
    r.scores_raw = {0, 0};
    r.scores_norm = {2.0, 4.5};
    attach_scores(m, {r});
    CHECK(m.records[0].score == 4.5);
    CHECK_FALSE(m.records[1].score.has_value());
    m.records[0].crop_index = 7;
    CHECK_THROWS_AS(attach_scores(m, {r}), ValidationError);
}
