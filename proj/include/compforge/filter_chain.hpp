#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "compforge/manifest.hpp"

namespace compforge::filter {

/// Per-pair scores produced outside this library (embedding similarity,
/// quality and composition models, FoV overlap). Metrics a producer did not
/// compute are absent.
struct ScoresSidecar {
    std::string pair_id;
    std::optional<double> clip_sim;            // [-1, 1]
    std::optional<double> subject_sim;         // [-1, 1]
    std::optional<bool> contain_flag;          // one side fully inside the other
    std::optional<double> contain_area_ratio;  // (0, 1]
    std::optional<double> quality_poor;        // [1, 5]
    std::optional<double> quality_good;
    std::optional<double> comp_poor;           // [1, 5]
    std::optional<double> comp_good;
    std::optional<double> fov_overlap;         // [0, 1]
};

/// Stages in execution order.
enum class Stage {
    Aspect,
    ClipSim,
    SubjectSim,
    Containment,
    ScoreGap,
    ZoomArea,
    ByteSize,
    Quality,
    Composition,
    Keywords,
    FovOverlap,
};

inline constexpr std::array<Stage, 11> kStageOrder{
    Stage::Aspect,   Stage::ClipSim,  Stage::SubjectSim,  Stage::Containment, Stage::ScoreGap,  Stage::ZoomArea,
    Stage::ByteSize, Stage::Quality,  Stage::Composition, Stage::Keywords,    Stage::FovOverlap,
};

std::string_view to_string(Stage s);
Stage parse_stage(std::string_view s);

bool applies_to(Stage s, Task t);

/// Whether the stage reads the sidecar row (as opposed to pair geometry or
/// image metadata).
bool reads_sidecar(Stage s);

struct FilterConfig {
    double aspect_lo = 0.45;
    double aspect_hi = 2.2;
    double clip_sim_min = 0.8;
    double subject_sim_min = 0.6;
    double contain_area_min = 0.6;
    double score_gap_min = 0.8;
    double zoom_area_max = 0.6;
    std::uint64_t byte_size_min = 200'000;
    double quality_min = 3.5;
    double comp_min = 3.0;
    std::vector<std::string> banned_keywords{"abstract", "painting", "art"};
    // No published value; a documented starting point.
    double fov_overlap_min = 0.3;
    std::set<Stage> disabled;

    bool enabled(Stage s) const { return !disabled.count(s); }
    void validate() const;
};

struct StageResult {
    bool pass = true;
    std::optional<double> measured;
};

/// Pure predicate for one stage. Throws DomainError if the stage does not
/// apply to the pair's task, ValidationError if a required sidecar value is
/// missing.
StageResult stage_eval(const PairRecord& pair, const ScoresSidecar* row, const FilterConfig& cfg, Stage stage);

struct FilterReport {
    std::string pair_id;
    bool pass = true;
    std::optional<Stage> failed_stage;
    std::optional<double> measured_value;
};

struct ChainResult {
    PairManifest passed;
    std::vector<FilterReport> reports;  // one per input pair, input order
};

using SidecarIndex = std::map<std::string, ScoresSidecar>;

/// Runs every enabled, applicable stage in kStageOrder and records the first
/// failure. A pair that needs a sidecar stage but has no row is a hard error.
ChainResult run_chain(const PairManifest& pairs, const SidecarIndex& sidecar, const FilterConfig& cfg);

/// Reads sidecar JSONL, skipping "_meta" header lines.
SidecarIndex read_sidecar(const std::filesystem::path& path);
SidecarIndex parse_sidecar(std::string_view text);
ScoresSidecar sidecar_from_json(const Json& obj, std::size_t line);
OrderedJson to_json(const ScoresSidecar& row);
OrderedJson to_json(const FilterReport& r);

/// Case-insensitive whole-word match of any banned word inside any keyword.
bool has_banned_keyword(const std::vector<std::string>& keywords, const std::vector<std::string>& banned);

}  // namespace compforge::filter
