#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "compforge/eval.hpp"
#include "compforge/filter_chain.hpp"
#include "compforge/grpo.hpp"
#include "compforge/pair_builder.hpp"
#include "compforge/resampler.hpp"
#include "compforge/score_solver.hpp"

namespace compforge {

/// Everything the pipeline stages read, loaded from one JSON file:
///
///   {"seed": 7,
///    "solver":  {"alpha": 2, "beta_loss": 2, "fallback_threshold": 0.5,
///                "lbfgs": {...}, "adam": {...}},
///    "bins":    {"lo": 0.45, "hi": 2.2, "n_bins": 11},
///    "shift":   {...}, "zoom": {...}, "view": {...},
///    "filter":  {..., "disabled": ["fov_overlap"]},
///    "grpo":    {...}, "strata": {"boundaries": [...], "target_counts": [...]},
///    "eval":    {"excluded": ["zoom_in/vs_original"]},
///    "templates": "prompts.json"}
///
/// Every key is optional; missing keys keep their defaults and unknown keys
/// are rejected. Relative template paths resolve against the config file.
struct PipelineConfig {
    std::uint64_t seed = 0;
    scores::SolverConfig solver{};
    pairs::AspectBinning bins{};
    pairs::ShiftConfig shift{};
    pairs::ZoomConfig zoom{};
    pairs::ViewSelectConfig view{};
    filter::FilterConfig filter{};
    grpo::GrpoConfig grpo{};
    std::optional<resample::StrataSpec> strata;
    eval::EvalConfig eval{};
    std::optional<std::filesystem::path> templates_path;

    void validate() const;
    prompts::PromptTemplateSet templates() const;
};

/// Throws ConfigError on malformed content or invalid values.
PipelineConfig config_from_json(const Json& obj, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

OrderedJson to_json(const PipelineConfig& cfg);

}  // namespace compforge
