#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "compforge/jsonl.hpp"
#include "compforge/optimizers.hpp"

namespace compforge::scores {

/// Annotator-derived probabilities for the N crops of one image: the share of
/// annotators who marked crop i good, and who put it in their top 3.
struct AnnotationTargets {
    std::vector<double> p_good;
    std::vector<double> p_top3;

    std::size_t size() const { return p_good.size(); }
};

enum class TargetCheck {
    Range,   // equal lengths, every entry in [0,1]
    Strict,  // Range plus sum(p_top3) == 3 and sum(p_good) in [8, 20]
};

void validate_targets(const AnnotationTargets& t, TargetCheck mode = TargetCheck::Range);

struct ScoreVector {
    std::vector<double> raw;
    std::optional<std::vector<double>> normalized;  // in [1,5] when present
};

struct SolverConfig {
    double alpha = 2.0;      // softmax scale of the top-1 model
    double beta_loss = 2.0;  // weight of the top-3 term
    optim::LbfgsSettings lbfgs{};
    optim::AdamSettings adam{};
    double fallback_threshold = 0.5;
    double norm_clip_lo = -3.0;
    double norm_clip_hi = 3.0;

    void validate() const;
};

enum class OptimizerKind { Lbfgs, Adam };
std::string_view to_string(OptimizerKind k);

struct Diagnostics {
    OptimizerKind optimizer = OptimizerKind::Lbfgs;  // run whose scores were returned
    double final_loss = 0.0;
    double lbfgs_loss = 0.0;
    std::optional<double> adam_loss;
    bool fallback_triggered = false;
    bool lbfgs_failed = false;
    bool adam_failed = false;
    int lbfgs_iterations = 0;
    int adam_iterations = 0;
    std::uint64_t seed = 0;
};

struct SolveResult {
    ScoreVector scores;
    Diagnostics diagnostics;
};

std::vector<double> predict_good(std::span<const double> s);

/// softmax(alpha * s), max-subtracted.
std::vector<double> predict_top1(std::span<const double> s, double alpha);

/// Probability that each item is among three sequential draws without
/// replacement, draws proportional to `p_top1` (Plackett-Luce).
std::vector<double> exact_top3(std::span<const double> p_top1);

/// 1 - (1 - p)^3: three independent draws with replacement.
std::vector<double> approx_top3(std::span<const double> p_top1);

double loss(std::span<const double> s, const AnnotationTargets& targets, const SolverConfig& cfg);

/// Loss plus its analytic gradient with respect to s.
double loss_and_gradient(std::span<const double> s, const AnnotationTargets& targets,
                         const SolverConfig& cfg, std::span<double> grad);

/// L-BFGS from s = 0; if its loss exceeds cfg.fallback_threshold (or it hit a
/// non-finite value), Adam from s = 0 as well, keeping whichever loss is lower.
/// The schedule has no random component; `seed` is carried into Diagnostics.
SolveResult optimize(const AnnotationTargets& targets, const SolverConfig& cfg, std::uint64_t seed);

/// Clip to [norm_clip_lo, norm_clip_hi] and map affinely onto [1,5].
ScoreVector normalize_scores(ScoreVector s, const SolverConfig& cfg);

/// Wire records for the infer-scores stage.
struct TargetsRecord {
    std::string image_id;
    AnnotationTargets targets;
};

struct ScoresRecord {
    std::string image_id;
    std::vector<double> scores_raw;
    std::vector<double> scores_norm;
    OptimizerKind optimizer = OptimizerKind::Lbfgs;
    double final_loss = 0.0;
};

TargetsRecord targets_record_from_json(const Json& obj, std::size_t line);
OrderedJson to_json(const TargetsRecord& r);
ScoresRecord scores_record_from_json(const Json& obj, std::size_t line);
OrderedJson to_json(const ScoresRecord& r);

std::vector<TargetsRecord> read_targets(const std::filesystem::path& path);
std::vector<ScoresRecord> read_scores(const std::filesystem::path& path);

}  // namespace compforge::scores
