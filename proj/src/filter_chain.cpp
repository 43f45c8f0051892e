#include "compforge/filter_chain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "compforge/error.hpp"

namespace compforge::filter {

namespace {

constexpr double kGapEps = 1e-9;

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

double need(const std::optional<double>& v, const PairRecord& pair, Stage stage, const char* field) {
    if (!v) {
        throw ValidationError("pair " + pair.pair_id + ": sidecar has no " + field + " for stage " +
                              std::string(to_string(stage)));
    }
    return *v;
}

void check_range(const std::optional<double>& v, double lo, double hi, bool lo_open, const char* field,
                 std::size_t line) {
    if (!v) return;
    const bool ok = std::isfinite(*v) && (lo_open ? *v > lo : *v >= lo) && *v <= hi;
    if (!ok) throw ValidationError("line " + std::to_string(line) + ": " + field + " out of range");
}

}  // namespace

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::Aspect: return "aspect";
        case Stage::ClipSim: return "clip_sim";
        case Stage::SubjectSim: return "subject_sim";
        case Stage::Containment: return "containment";
        case Stage::ScoreGap: return "score_gap";
        case Stage::ZoomArea: return "zoom_area";
        case Stage::ByteSize: return "byte_size";
        case Stage::Quality: return "quality";
        case Stage::Composition: return "composition";
        case Stage::Keywords: return "keywords";
        case Stage::FovOverlap: return "fov_overlap";
    }
    return "aspect";
}

Stage parse_stage(std::string_view s) {
    for (Stage st : kStageOrder)
        if (to_string(st) == s) return st;
    throw ConfigError("unknown filter stage \"" + std::string(s) + "\"");
}

bool applies_to(Stage s, Task t) {
    switch (s) {
        case Stage::Aspect: return true;
        case Stage::ClipSim:
        case Stage::SubjectSim:
        case Stage::Containment:
        case Stage::ScoreGap: return t == Task::Shift;
        case Stage::ZoomArea: return t == Task::ZoomIn;
        case Stage::ByteSize:
        case Stage::Quality:
        case Stage::Composition:
        case Stage::Keywords:
        case Stage::FovOverlap: return t == Task::ViewChange;
    }
    return false;
}

bool reads_sidecar(Stage s) {
    switch (s) {
        case Stage::Aspect:
        case Stage::ZoomArea:
        case Stage::ByteSize:
        case Stage::Keywords: return false;
        default: return true;
    }
}

void FilterConfig::validate() const {
    if (!(aspect_lo > 0.0 && aspect_lo < aspect_hi)) throw ConfigError("filter aspect bounds invalid");
    auto unit = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
    if (!unit(clip_sim_min, -1, 1) || !unit(subject_sim_min, -1, 1))
        throw ConfigError("filter similarity thresholds must be in [-1,1]");
    if (!unit(contain_area_min, 0, 1) || !unit(zoom_area_max, 0, 1) || !unit(fov_overlap_min, 0, 1))
        throw ConfigError("filter ratio thresholds must be in [0,1]");
    if (!unit(quality_min, 1, 5) || !unit(comp_min, 1, 5)) throw ConfigError("filter score thresholds must be in [1,5]");
    if (!(score_gap_min >= 0.0 && score_gap_min <= 4.0)) throw ConfigError("filter score_gap_min must be in [0,4]");
}

bool has_banned_keyword(const std::vector<std::string>& keywords, const std::vector<std::string>& banned) {
    std::vector<std::string> banned_lower;
    for (const auto& b : banned) banned_lower.push_back(lower(b));
    for (const auto& kw : keywords) {
        const std::string k = lower(kw);
        std::size_t i = 0;
        while (i < k.size()) {
            while (i < k.size() && !std::isalnum(static_cast<unsigned char>(k[i]))) ++i;
            std::size_t j = i;
            while (j < k.size() && std::isalnum(static_cast<unsigned char>(k[j]))) ++j;
            if (j > i) {
                const std::string_view word(k.data() + i, j - i);
                if (std::find(banned_lower.begin(), banned_lower.end(), word) != banned_lower.end()) return true;
            }
            i = j;
        }
    }
    return false;
}

StageResult stage_eval(const PairRecord& pair, const ScoresSidecar* row, const FilterConfig& cfg, Stage stage) {
    if (!applies_to(stage, pair.task)) {
        throw DomainError("stage " + std::string(to_string(stage)) + " does not apply to " +
                          std::string(to_string(pair.task)) + " pairs");
    }
    if (reads_sidecar(stage) && !row) {
        throw ValidationError("pair " + pair.pair_id + ": no sidecar entry for stage " +
                              std::string(to_string(stage)));
    }

    switch (stage) {
        case Stage::Aspect: {
            for (const PairSide* side : {&pair.poor, &pair.good}) {
                const double a = side->aspect();
                if (a < cfg.aspect_lo || a > cfg.aspect_hi) return {false, a};
            }
            return {true, pair.good.aspect()};
        }
        case Stage::ClipSim: {
            const double v = need(row->clip_sim, pair, stage, "clip_sim");
            return {v >= cfg.clip_sim_min, v};
        }
        case Stage::SubjectSim: {
            const double v = need(row->subject_sim, pair, stage, "subject_sim");
            return {v >= cfg.subject_sim_min, v};
        }
        case Stage::Containment: {
            if (!row->contain_flag) {
                throw ValidationError("pair " + pair.pair_id + ": sidecar has no contain_flag for stage containment");
            }
            if (!*row->contain_flag) return {true, row->contain_area_ratio};
            const double v = need(row->contain_area_ratio, pair, stage, "contain_area_ratio");
            return {v >= cfg.contain_area_min, v};
        }
        case Stage::ScoreGap: {
            const double gap = need(row->comp_good, pair, stage, "comp_good") -
                               need(row->comp_poor, pair, stage, "comp_poor");
            return {gap >= cfg.score_gap_min - kGapEps, gap};
        }
        case Stage::ZoomArea: {
            const double ratio = static_cast<double>(pair.good.area()) / static_cast<double>(pair.poor.area());
            return {ratio <= cfg.zoom_area_max, ratio};
        }
        case Stage::ByteSize: {
            const auto size = pair.good.image.byte_size;
            return {size >= cfg.byte_size_min, static_cast<double>(size)};
        }
        case Stage::Quality: {
            const double v = need(row->quality_good, pair, stage, "quality_good");
            return {v >= cfg.quality_min, v};
        }
        case Stage::Composition: {
            // Retained only when strictly above the threshold.
            const double v = need(row->comp_good, pair, stage, "comp_good");
            return {v > cfg.comp_min, v};
        }
        case Stage::Keywords:
            return {!has_banned_keyword(pair.good.image.keywords, cfg.banned_keywords), std::nullopt};
        case Stage::FovOverlap: {
            const double v = need(row->fov_overlap, pair, stage, "fov_overlap");
            return {v >= cfg.fov_overlap_min, v};
        }
    }
    return {};
}

ChainResult run_chain(const PairManifest& pairs, const SidecarIndex& sidecar, const FilterConfig& cfg) {
    cfg.validate();
    ChainResult result;
    result.reports.reserve(pairs.records.size());

    for (const auto& pair : pairs.records) {
        const ScoresSidecar* row = nullptr;
        if (auto it = sidecar.find(pair.pair_id); it != sidecar.end()) row = &it->second;

        FilterReport report;
        report.pair_id = pair.pair_id;
        for (Stage stage : kStageOrder) {
            if (!cfg.enabled(stage) || !applies_to(stage, pair.task)) continue;
            if (reads_sidecar(stage) && !row) {
                throw ValidationError("pair " + pair.pair_id + ": missing sidecar entry required by stage " +
                                      std::string(to_string(stage)));
            }
        }
        for (Stage stage : kStageOrder) {
            if (!cfg.enabled(stage) || !applies_to(stage, pair.task)) continue;
            const StageResult r = stage_eval(pair, row, cfg, stage);
            if (!r.pass) {
                report.pass = false;
                report.failed_stage = stage;
                report.measured_value = r.measured;
                break;
            }
        }
        if (report.pass) result.passed.records.push_back(pair);
        result.reports.push_back(std::move(report));
    }
    return result;
}

ScoresSidecar sidecar_from_json(const Json& obj, std::size_t line) {
    FieldReader f(obj, line);
    ScoresSidecar r;
    r.pair_id = f.required<std::string>("pair_id");
    r.clip_sim = f.optional<double>("clip_sim");
    r.subject_sim = f.optional<double>("subject_sim");
    r.contain_flag = f.optional<bool>("contain_flag");
    r.contain_area_ratio = f.optional<double>("contain_area_ratio");
    r.quality_poor = f.optional<double>("quality_poor");
    r.quality_good = f.optional<double>("quality_good");
    r.comp_poor = f.optional<double>("comp_poor");
    r.comp_good = f.optional<double>("comp_good");
    r.fov_overlap = f.optional<double>("fov_overlap");
    f.finish();
    check_range(r.clip_sim, -1, 1, false, "clip_sim", line);
    check_range(r.subject_sim, -1, 1, false, "subject_sim", line);
    check_range(r.contain_area_ratio, 0, 1, true, "contain_area_ratio", line);
    check_range(r.quality_poor, 1, 5, false, "quality_poor", line);
    check_range(r.quality_good, 1, 5, false, "quality_good", line);
    check_range(r.comp_poor, 1, 5, false, "comp_poor", line);
    check_range(r.comp_good, 1, 5, false, "comp_good", line);
    check_range(r.fov_overlap, 0, 1, false, "fov_overlap", line);
    return r;
}

OrderedJson to_json(const ScoresSidecar& r) {
    OrderedJson j;
    j["pair_id"] = r.pair_id;
    auto put = [&j](const char* key, const auto& v) {
        if (v) j[key] = *v;
    };
    put("clip_sim", r.clip_sim);
    put("subject_sim", r.subject_sim);
    put("contain_flag", r.contain_flag);
    put("contain_area_ratio", r.contain_area_ratio);
    put("quality_poor", r.quality_poor);
    put("quality_good", r.quality_good);
    put("comp_poor", r.comp_poor);
    put("comp_good", r.comp_good);
    put("fov_overlap", r.fov_overlap);
    return j;
}

OrderedJson to_json(const FilterReport& r) {
    OrderedJson j;
    j["pair_id"] = r.pair_id;
    j["verdict"] = r.pass ? "pass" : "fail";
    if (r.failed_stage) j["failed_stage"] = to_string(*r.failed_stage);
    if (r.measured_value) j["measured_value"] = *r.measured_value;
    return j;
}

SidecarIndex parse_sidecar(std::string_view text) {
    SidecarIndex out;
    for_each_jsonl_text(text, [&](const Json& obj, std::size_t line) {
        if (obj.contains("_meta")) return;
        ScoresSidecar row = sidecar_from_json(obj, line);
        const std::string id = row.pair_id;
        if (!out.emplace(id, std::move(row)).second)
            throw ValidationError("line " + std::to_string(line) + ": duplicate sidecar row for " + id);
    });
    return out;
}

SidecarIndex read_sidecar(const std::filesystem::path& path) {
    return parse_sidecar(read_text(path));
}

}  // namespace compforge::filter
