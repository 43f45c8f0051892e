#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "compforge/manifest.hpp"
#include "compforge/prompts.hpp"
#include "compforge/score_solver.hpp"

namespace compforge::pairs {

/// Geometrically spaced aspect-ratio bin centers over [lo, hi].
struct AspectBinning {
    double lo = 0.45;
    double hi = 2.2;
    int n_bins = 11;

    double center(int k) const;
    void validate() const;
};

/// Nearest bin center in log space (ties to the lower bin), or nullopt when
/// the ratio lies outside [lo, hi]. Throws DomainError for ratio <= 0.
std::optional<int> bin_aspect(double ratio, const AspectBinning& b);

struct ShiftConfig {
    double good_min = 4.0;            // good iff score > good_min
    double poor_max = 2.0;            // poor iff score < poor_max
    double mid_score_fraction = 0.10; // share of mid-score crops added as poor sides
    double rotation_max_deg = 5.0;
    double score_gap_min = 0.8;

    void validate() const;
};

struct ZoomConfig {
    double good_min = 4.0;
    double max_area_ratio = 0.6;

    void validate() const;
};

struct ViewSelectConfig {
    int n_best = 3;
    int n_worst = 10;

    void validate() const;
};

/// Shared inputs every builder needs to fill in the pair text fields.
struct BuildContext {
    std::uint64_t seed = 0;
    prompts::PromptTemplateSet templates = prompts::PromptTemplateSet::defaults();
};

/// Shift pairs per (source image, aspect bin): every good crop against every
/// poor crop plus a seeded sample of mid-score crops, subject to the score gap.
/// The poor side carries a seeded rotation in [-rotation_max_deg, rotation_max_deg].
std::vector<PairRecord> build_shift_pairs(const ImageManifest& images, const CropManifest& crops,
                                          const ShiftConfig& cfg, const AspectBinning& bins,
                                          const BuildContext& ctx);

/// Zoom-in pairs: original (reframed by containing_crop to the good crop's
/// aspect) versus each good crop, dropping pairs whose area ratio exceeds the cap.
std::vector<PairRecord> build_zoom_pairs(const ImageManifest& images, const CropManifest& crops,
                                         const ZoomConfig& cfg, const BuildContext& ctx);

struct SceneScore {
    std::string scene_id;
    std::string image_id;
    double score = 0.0;
};

struct ViewSelection {
    std::vector<PairRecord> pairs;
    std::vector<std::string> warnings;
};

/// Per scene: best = top min(n_best, max(1, k/2)), worst = bottom
/// min(n_worst, k - |best|); emits best x worst as (good, poor) pairs.
/// Scenes with fewer than two images are skipped with a warning.
ViewSelection select_view_pairs(const std::vector<SceneScore>& scene_scores, const ImageManifest& images,
                                const ViewSelectConfig& cfg, const BuildContext& ctx);

std::vector<SceneScore> read_scene_scores(const std::filesystem::path& path);

/// Copies `scores_norm` from infer-scores output onto crops matched by
/// (image_id, crop_index). Crops without a crop_index are left untouched.
/// Throws ValidationError when a crop_index is out of range for its image.
void attach_scores(CropManifest& crops, const std::vector<scores::ScoresRecord>& scores);

}  // namespace compforge::pairs
