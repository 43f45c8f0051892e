#include "compforge/score_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "compforge/error.hpp"

namespace compforge::scores {

namespace {

constexpr double kMinDenominator = 1e-12;

void require_finite(std::span<const double> s, const char* what) {
    for (double v : s)
        if (!std::isfinite(v)) throw DomainError(std::string(what) + ": non-finite score");
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

void validate_targets(const AnnotationTargets& t, TargetCheck mode) {
    if (t.p_good.size() != t.p_top3.size())
        throw ValidationError("p_good and p_top3 have different lengths");
    if (t.p_good.empty()) throw ValidationError("targets are empty");
    auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!in_unit(t.p_good[i]) || !in_unit(t.p_top3[i]))
            throw ValidationError("target probability outside [0,1] at crop " + std::to_string(i));
    }
    if (mode == TargetCheck::Strict) {
        const double top3 = std::accumulate(t.p_top3.begin(), t.p_top3.end(), 0.0);
        const double good = std::accumulate(t.p_good.begin(), t.p_good.end(), 0.0);
        if (std::abs(top3 - 3.0) > 1e-9)
            throw ValidationError("sum of p_top3 is " + std::to_string(top3) + ", expected 3");
        if (good < 8.0 - 1e-9 || good > 20.0 + 1e-9)
            throw ValidationError("sum of p_good is " + std::to_string(good) + ", expected [8,20]");
    }
}

void SolverConfig::validate() const {
    if (!(alpha > 0.0)) throw ConfigError("solver.alpha must be > 0");
    if (!(beta_loss >= 0.0)) throw ConfigError("solver.beta_loss must be >= 0");
    if (!(fallback_threshold > 0.0)) throw ConfigError("solver.fallback_threshold must be > 0");
    if (!(norm_clip_lo < norm_clip_hi)) throw ConfigError("solver.norm_clip_lo must be < norm_clip_hi");
    if (lbfgs.history_size < 1 || lbfgs.max_iter < 1 || lbfgs.max_epochs < 1 || !(lbfgs.lr > 0.0))
        throw ConfigError("solver.lbfgs settings must be positive");
    if (adam.max_epochs < 1 || !(adam.lr > 0.0)) throw ConfigError("solver.adam settings must be positive");
}

std::string_view to_string(OptimizerKind k) {
    return k == OptimizerKind::Lbfgs ? "lbfgs" : "adam";
}

std::vector<double> predict_good(std::span<const double> s) {
    require_finite(s, "predict_good");
    std::vector<double> out(s.size());
    std::transform(s.begin(), s.end(), out.begin(), sigmoid);
    return out;
}

std::vector<double> predict_top1(std::span<const double> s, double alpha) {
    if (s.empty()) throw DomainError("predict_top1: empty score vector");
    require_finite(s, "predict_top1");
    const double m = *std::max_element(s.begin(), s.end());
    std::vector<double> out(s.size());
    double z = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        out[i] = std::exp(alpha * (s[i] - m));
        z += out[i];
    }
    for (double& v : out) v /= z;
    return out;
}

std::vector<double> exact_top3(std::span<const double> p) {
    const std::size_t n = p.size();
    if (n < 3) throw DomainError("exact_top3: need at least 3 items");
    double total = 0.0;
    for (double v : p) {
        if (!std::isfinite(v) || v < 0.0) throw DomainError("exact_top3: negative or non-finite probability");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DomainError("exact_top3: probabilities do not sum to 1");

    std::vector<double> one_minus(n);
    for (std::size_t j = 0; j < n; ++j) {
        one_minus[j] = 1.0 - p[j];
        if (one_minus[j] < kMinDenominator) throw DomainError("exact_top3: degenerate denominator 1 - p_j");
    }
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
            if (j != k && one_minus[j] - p[k] < kMinDenominator)
                throw DomainError("exact_top3: degenerate denominator 1 - p_j - p_k");

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double second = 0.0;  // i drawn after j
        double third = 0.0;   // i drawn after j, then k
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            second += p[j] / one_minus[j];
            double inner = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                if (k == i || k == j) continue;
                inner += p[k] / (one_minus[j] - p[k]);
            }
            third += p[j] / one_minus[j] * inner;
        }
        out[i] = p[i] * (1.0 + second + third);
    }
    return out;
}

std::vector<double> approx_top3(std::span<const double> p) {
    std::vector<double> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] >= 0.0 && p[i] <= 1.0)) throw DomainError("approx_top3: probability outside [0,1]");
        const double q = 1.0 - p[i];
        out[i] = 1.0 - q * q * q;
    }
    return out;
}

double loss_and_gradient(std::span<const double> s, const AnnotationTargets& targets,
                         const SolverConfig& cfg, std::span<double> grad) {
    const std::size_t n = s.size();
    if (targets.p_good.size() != n || targets.p_top3.size() != n)
        throw DomainError("loss: score and target dimensions differ");
    if (!grad.empty() && grad.size() != n) throw DomainError("loss: gradient buffer has wrong size");
    for (double v : s)
        if (!std::isfinite(v)) return NAN;

    const auto top1 = predict_top1(s, cfg.alpha);
    double value = 0.0;
    double weighted_sum = 0.0;
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double g = sigmoid(s[i]);
        const double dg = g - targets.p_good[i];
        const double q = 1.0 - top1[i];
        const double dt = 1.0 - q * q * q - targets.p_top3[i];
        value += dg * dg + cfg.beta_loss * dt * dt;
        if (!grad.empty()) {
            grad[i] = 2.0 * dg * g * (1.0 - g);
            // d(top3_i)/d(top1_i) = 3 q^2, chained through the softmax below.
            u[i] = 2.0 * cfg.beta_loss * dt * 3.0 * q * q * top1[i];
            weighted_sum += u[i];
        }
    }
    if (!grad.empty()) {
        for (std::size_t k = 0; k < n; ++k) grad[k] += cfg.alpha * (u[k] - top1[k] * weighted_sum);
    }
    return value;
}

double loss(std::span<const double> s, const AnnotationTargets& targets, const SolverConfig& cfg) {
    require_finite(s, "loss");
    return loss_and_gradient(s, targets, cfg, {});
}

SolveResult optimize(const AnnotationTargets& targets, const SolverConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    validate_targets(targets, TargetCheck::Range);

    const optim::Objective objective = [&](std::span<const double> x, std::span<double> g) {
        return loss_and_gradient(x, targets, cfg, g);
    };
    const std::vector<double> start(targets.size(), 0.0);

    Diagnostics diag;
    diag.seed = seed;

    auto lb = optim::lbfgs_minimize(objective, start, cfg.lbfgs);
    diag.lbfgs_iterations = lb.iterations;
    diag.lbfgs_failed = lb.failed || !std::isfinite(lb.f);
    diag.lbfgs_loss = lb.f;

    SolveResult result;
    result.scores.raw = lb.x;
    diag.optimizer = OptimizerKind::Lbfgs;
    diag.final_loss = lb.f;

    if (diag.lbfgs_failed || lb.f > cfg.fallback_threshold) {
        diag.fallback_triggered = true;
        auto ad = optim::adam_minimize(objective, start, cfg.adam);
        diag.adam_iterations = ad.iterations;
        diag.adam_failed = ad.failed || !std::isfinite(ad.f);
        diag.adam_loss = ad.f;
        if (diag.lbfgs_failed && diag.adam_failed)
            throw OptimizationError("both L-BFGS and Adam produced non-finite losses");
        if (diag.lbfgs_failed || (!diag.adam_failed && ad.f < lb.f)) {
            result.scores.raw = ad.x;
            diag.optimizer = OptimizerKind::Adam;
            diag.final_loss = ad.f;
        }
    }
    result.diagnostics = diag;
    return result;
}

ScoreVector normalize_scores(ScoreVector s, const SolverConfig& cfg) {
    require_finite(s.raw, "normalize_scores");
    const double lo = cfg.norm_clip_lo;
    const double hi = cfg.norm_clip_hi;
    std::vector<double> norm(s.raw.size());
    for (std::size_t i = 0; i < norm.size(); ++i) {
        const double c = std::clamp(s.raw[i], lo, hi);
        norm[i] = std::clamp(1.0 + 4.0 * (c - lo) / (hi - lo), 1.0, 5.0);
    }
    s.normalized = std::move(norm);
    return s;
}

TargetsRecord targets_record_from_json(const Json& obj, std::size_t line) {
    FieldReader f(obj, line);
    TargetsRecord r;
    r.image_id = f.required<std::string>("image_id");
    r.targets.p_good = f.required<std::vector<double>>("p_good");
    r.targets.p_top3 = f.required<std::vector<double>>("p_top3");
    f.finish();
    try {
        validate_targets(r.targets, TargetCheck::Range);
    } catch (const ValidationError& e) {
        throw ValidationError("line " + std::to_string(line) + " (" + r.image_id + "): " + e.what());
    }
    return r;
}

OrderedJson to_json(const TargetsRecord& r) {
    OrderedJson j;
    j["image_id"] = r.image_id;
    j["p_good"] = r.targets.p_good;
    j["p_top3"] = r.targets.p_top3;
    return j;
}

ScoresRecord scores_record_from_json(const Json& obj, std::size_t line) {
    FieldReader f(obj, line);
    ScoresRecord r;
    r.image_id = f.required<std::string>("image_id");
    r.scores_raw = f.required<std::vector<double>>("scores_raw");
    r.scores_norm = f.required<std::vector<double>>("scores_norm");
    const auto opt = f.required<std::string>("optimizer");
    if (opt == "lbfgs") r.optimizer = OptimizerKind::Lbfgs;
    else if (opt == "adam") r.optimizer = OptimizerKind::Adam;
    else f.fail_type("optimizer", "expected \"lbfgs\" or \"adam\"");
    r.final_loss = f.required<double>("final_loss");
    f.finish();
    if (r.scores_raw.size() != r.scores_norm.size())
        throw ValidationError("line " + std::to_string(line) + ": scores_raw and scores_norm lengths differ");
    return r;
}

OrderedJson to_json(const ScoresRecord& r) {
    OrderedJson j;
    j["image_id"] = r.image_id;
    j["scores_raw"] = r.scores_raw;
    j["scores_norm"] = r.scores_norm;
    j["optimizer"] = to_string(r.optimizer);
    j["final_loss"] = r.final_loss;
    return j;
}

std::vector<TargetsRecord> read_targets(const std::filesystem::path& path) {
    std::vector<TargetsRecord> out;
    for_each_jsonl(path, [&](const Json& obj, std::size_t line) {
        out.push_back(targets_record_from_json(obj, line));
    });
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
    for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i].image_id == out[i - 1].image_id)
            throw ValidationError("duplicate targets for image " + out[i].image_id);
    return out;
}

std::vector<ScoresRecord> read_scores(const std::filesystem::path& path) {
    std::vector<ScoresRecord> out;
    for_each_jsonl(path, [&](const Json& obj, std::size_t line) {
        out.push_back(scores_record_from_json(obj, line));
    });
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
    for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i].image_id == out[i - 1].image_id)
            throw ValidationError("duplicate scores for image " + out[i].image_id);
    return out;
}

}  // namespace compforge::scores
