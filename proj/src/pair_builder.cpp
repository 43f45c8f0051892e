#include "compforge/pair_builder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "compforge/error.hpp"
#include "compforge/geometry.hpp"
#include "compforge/seeding.hpp"

namespace compforge::pairs {

namespace {

constexpr double kScoreEps = 1e-9;

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string provenance(const char* builder, const std::string& config_repr) {
    return std::string(builder) + "@" + hex16(fnv1a64(config_repr));
}

std::map<std::string, const ImageRef*> index_images(const ImageManifest& images) {
    std::map<std::string, const ImageRef*> out;
    for (const auto& im : images.records) out.emplace(im.image_id, &im);
    return out;
}

const ImageRef& parent_of(const std::map<std::string, const ImageRef*>& index, const CropRecord& c) {
    auto it = index.find(c.image_id);
    if (it == index.end())
        throw ValidationError("crop " + c.crop_id + " references unknown image " + c.image_id);
    if (!c.rect.fits_in(it->second->width_px, it->second->height_px))
        throw ValidationError("crop " + c.crop_id + " exceeds the bounds of image " + c.image_id);
    return *it->second;
}

void require_normalized(const CropRecord& c) {
    if (!c.score) throw ValidationError("crop " + c.crop_id + " has no score");
    if (!(*c.score >= 1.0 && *c.score <= 5.0))
        throw ValidationError("crop " + c.crop_id + " score outside [1,5]");
}

PairRecord make_pair(Task task, PairSide poor, PairSide good, std::string poor_id, std::string_view good_id,
                     const BuildContext& ctx, std::string prov) {
    PairRecord p;
    p.pair_id = make_pair_id(task, poor_id, good_id);
    p.task = task;
    p.poor = std::move(poor);
    p.good = std::move(good);
    p.task_prompt = prompts::sample_prompt(prompts::prompt_kind(task), ctx.templates, ctx.seed, p.pair_id);
    p.provenance = std::move(prov);
    return p;
}

void sort_by_id(std::vector<PairRecord>& pairs) {
    std::sort(pairs.begin(), pairs.end(),
              [](const PairRecord& a, const PairRecord& b) { return a.pair_id < b.pair_id; });
    for (std::size_t i = 1; i < pairs.size(); ++i)
        if (pairs[i].pair_id == pairs[i - 1].pair_id)
            throw ValidationError("builder produced duplicate pair id " + pairs[i].pair_id);
}

}  // namespace

double AspectBinning::center(int k) const {
    return lo * std::pow(hi / lo, static_cast<double>(k) / (n_bins - 1));
}

void AspectBinning::validate() const {
    if (!(lo > 0.0 && lo < hi)) throw ConfigError("aspect binning needs 0 < lo < hi");
    if (n_bins < 2) throw ConfigError("aspect binning needs at least 2 bins");
}

std::optional<int> bin_aspect(double ratio, const AspectBinning& b) {
    if (!(ratio > 0.0) || !std::isfinite(ratio)) throw DomainError("bin_aspect: ratio must be positive");
    if (ratio < b.lo || ratio > b.hi) return std::nullopt;
    const double pos = (b.n_bins - 1) * std::log(ratio / b.lo) / std::log(b.hi / b.lo);
    int k = static_cast<int>(std::floor(pos));
    if (pos - k > 0.5) ++k;  // exactly halfway stays on the lower bin
    return std::clamp(k, 0, b.n_bins - 1);
}

void ShiftConfig::validate() const {
    if (!(poor_max < good_min)) throw ConfigError("shift.poor_max must be < shift.good_min");
    if (!(mid_score_fraction >= 0.0 && mid_score_fraction <= 1.0))
        throw ConfigError("shift.mid_score_fraction must be in [0,1]");
    if (!(rotation_max_deg >= 0.0)) throw ConfigError("shift.rotation_max_deg must be >= 0");
    if (!(score_gap_min >= 0.0)) throw ConfigError("shift.score_gap_min must be >= 0");
}

void ZoomConfig::validate() const {
    if (!(max_area_ratio > 0.0 && max_area_ratio < 1.0)) throw ConfigError("zoom.max_area_ratio must be in (0,1)");
}

void ViewSelectConfig::validate() const {
    if (n_best < 1 || n_worst < 1) throw ConfigError("view.n_best and view.n_worst must be >= 1");
}

std::vector<PairRecord> build_shift_pairs(const ImageManifest& images, const CropManifest& crops,
                                          const ShiftConfig& cfg, const AspectBinning& bins,
                                          const BuildContext& ctx) {
    cfg.validate();
    bins.validate();
    const auto index = index_images(images);

    std::ostringstream repr;
    repr << "shift|" << cfg.good_min << '|' << cfg.poor_max << '|' << cfg.mid_score_fraction << '|'
         << cfg.rotation_max_deg << '|' << cfg.score_gap_min << '|' << bins.lo << '|' << bins.hi << '|'
         << bins.n_bins << '|' << ctx.seed;
    const std::string prov = provenance("build_shift_pairs", repr.str());

    // (image_id, bin) -> crops, in crop_id order since the manifest is sorted.
    std::map<std::pair<std::string, int>, std::vector<const CropRecord*>> groups;
    for (const auto& c : crops.records) {
        parent_of(index, c);
        require_normalized(c);
        const auto bin = bin_aspect(c.rect.aspect(), bins);
        if (!bin) continue;
        groups[{c.image_id, *bin}].push_back(&c);
    }

    std::vector<PairRecord> out;
    for (const auto& [key, members] : groups) {
        std::vector<const CropRecord*> good, poor, mid;
        for (const CropRecord* c : members) {
            if (*c->score > cfg.good_min) good.push_back(c);
            else if (*c->score < cfg.poor_max) poor.push_back(c);
            else mid.push_back(c);
        }
        if (good.empty()) continue;

        const auto n_mid = static_cast<std::size_t>(
            std::ceil(cfg.mid_score_fraction * static_cast<double>(mid.size()) - kScoreEps));
        Rng rng = make_rng(ctx.seed, "shift-mid:" + key.first + ":" + std::to_string(key.second));
        for (std::size_t i = 0; i < n_mid && i < mid.size(); ++i) {
            const std::size_t j = i + uniform_below(rng, mid.size() - i);
            std::swap(mid[i], mid[j]);
            poor.push_back(mid[i]);
        }

        const ImageRef& parent = *index.at(key.first);
        for (const CropRecord* g : good) {
            for (const CropRecord* p : poor) {
                if (*g->score - *p->score < cfg.score_gap_min - kScoreEps) continue;
                PairRecord rec = make_pair(Task::Shift, PairSide{parent, p->rect}, PairSide{parent, g->rect},
                                           p->crop_id, g->crop_id, ctx, prov);
                Rng rot = make_rng(ctx.seed, "rotation:" + rec.pair_id);
                rec.rotation_deg = cfg.rotation_max_deg * (2.0 * uniform01(rot) - 1.0);
                out.push_back(std::move(rec));
            }
        }
    }
    sort_by_id(out);
    return out;
}

std::vector<PairRecord> build_zoom_pairs(const ImageManifest& images, const CropManifest& crops,
                                         const ZoomConfig& cfg, const BuildContext& ctx) {
    cfg.validate();
    const auto index = index_images(images);

    std::ostringstream repr;
    repr << "zoom|" << cfg.good_min << '|' << cfg.max_area_ratio << '|' << ctx.seed;
    const std::string prov = provenance("build_zoom_pairs", repr.str());

    std::vector<PairRecord> out;
    for (const auto& c : crops.records) {
        const ImageRef& parent = parent_of(index, c);
        const bool qualifies = c.best_label || (c.score && *c.score > cfg.good_min);
        if (!qualifies) continue;

        const CropRect frame = geometry::containing_crop(parent.width_px, parent.height_px, c.rect);
        const double ratio = static_cast<double>(c.rect.area()) / static_cast<double>(frame.area());
        if (ratio > cfg.max_area_ratio) continue;

        PairSide poor{parent, frame};
        if (frame == CropRect{0, 0, parent.width_px, parent.height_px}) poor.crop.reset();
        out.push_back(make_pair(Task::ZoomIn, std::move(poor), PairSide{parent, c.rect}, parent.image_id,
                                c.crop_id, ctx, prov));
    }
    sort_by_id(out);
    return out;
}

ViewSelection select_view_pairs(const std::vector<SceneScore>& scene_scores, const ImageManifest& images,
                                const ViewSelectConfig& cfg, const BuildContext& ctx) {
    cfg.validate();
    const auto index = index_images(images);

    std::ostringstream repr;
    repr << "view|" << cfg.n_best << '|' << cfg.n_worst << '|' << ctx.seed;
    const std::string prov = provenance("select_view_pairs", repr.str());

    std::map<std::string, std::vector<const SceneScore*>> scenes;
    for (const auto& s : scene_scores) {
        if (!(s.score >= 1.0 && s.score <= 5.0))
            throw ValidationError("scene " + s.scene_id + " image " + s.image_id + ": score outside [1,5]");
        if (!index.count(s.image_id))
            throw ValidationError("scene " + s.scene_id + " references unknown image " + s.image_id);
        scenes[s.scene_id].push_back(&s);
    }

    ViewSelection result;
    for (auto& [scene_id, members] : scenes) {
        const int k = static_cast<int>(members.size());
        if (k < 2) {
            result.warnings.push_back("scene " + scene_id + " has " + std::to_string(k) +
                                      " image(s); at least 2 are needed, skipped");
            continue;
        }
        std::sort(members.begin(), members.end(), [](const SceneScore* a, const SceneScore* b) {
            if (a->score != b->score) return a->score > b->score;
            return a->image_id < b->image_id;
        });
        const int n_best = std::min(cfg.n_best, std::max(1, k / 2));
        const int n_worst = std::min(cfg.n_worst, k - n_best);
        for (int b = 0; b < n_best; ++b) {
            const ImageRef& good = *index.at(members[b]->image_id);
            for (int w = k - n_worst; w < k; ++w) {
                const ImageRef& poor = *index.at(members[w]->image_id);
                result.pairs.push_back(make_pair(Task::ViewChange, PairSide{poor, std::nullopt},
                                                 PairSide{good, std::nullopt}, poor.image_id, good.image_id,
                                                 ctx, prov));
            }
        }
    }
    sort_by_id(result.pairs);
    return result;
}

std::vector<SceneScore> read_scene_scores(const std::filesystem::path& path) {
    std::vector<SceneScore> out;
    for_each_jsonl(path, [&](const Json& obj, std::size_t line) {
        FieldReader f(obj, line);
        SceneScore s;
        s.scene_id = f.required<std::string>("scene_id");
        s.image_id = f.required<std::string>("image_id");
        s.score = f.required<double>("score");
        f.finish();
        out.push_back(std::move(s));
    });
    return out;
}

void attach_scores(CropManifest& crops, const std::vector<scores::ScoresRecord>& scores) {
    std::map<std::string, const scores::ScoresRecord*> by_image;
    for (const auto& s : scores) by_image.emplace(s.image_id, &s);
    for (auto& c : crops.records) {
        if (!c.crop_index) continue;
        auto it = by_image.find(c.image_id);
        if (it == by_image.end()) continue;
        const auto& norm = it->second->scores_norm;
        if (*c.crop_index < 0 || static_cast<std::size_t>(*c.crop_index) >= norm.size())
            throw ValidationError("crop " + c.crop_id + ": crop_index out of range for image " + c.image_id);
        c.score = norm[static_cast<std::size_t>(*c.crop_index)];
    }
}

}  // namespace compforge::pairs
