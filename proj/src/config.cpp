#include "compforge/config.hpp"

#include <functional>

namespace compforge {

namespace {

template <typename T>
void take(FieldReader& f, const std::string& key, T& dst) {
    if (auto v = f.optional<T>(key)) dst = *v;
}

/// Runs `body` over the object at `key` (if present), naming the section in errors.
void section(FieldReader& parent, const std::string& key, const std::string& path,
             const std::function<void(FieldReader&)>& body) {
    const Json* obj = parent.raw(key);
    if (!obj || obj->is_null()) return;
    const std::string name = path.empty() ? key : path + "." + key;
    if (!obj->is_object()) throw ConfigError(name + ": expected an object");
    try {
        FieldReader f(*obj, 0);
        body(f);
        f.finish();
    } catch (const ParseError& e) {
        throw ConfigError(name + ": " + e.what());
    }
}

void read_lbfgs(FieldReader& f, optim::LbfgsSettings& s) {
    take(f, "lr", s.lr);
    take(f, "max_epochs", s.max_epochs);
    take(f, "max_iter", s.max_iter);
    take(f, "history_size", s.history_size);
    take(f, "tolerance_grad", s.tolerance_grad);
    take(f, "tolerance_change", s.tolerance_change);
    take(f, "armijo_c1", s.armijo_c1);
    take(f, "wolfe_c2", s.wolfe_c2);
    take(f, "max_line_evals", s.max_line_evals);
}

void read_adam(FieldReader& f, optim::AdamSettings& s) {
    take(f, "lr", s.lr);
    take(f, "max_epochs", s.max_epochs);
    take(f, "beta1", s.beta1);
    take(f, "beta2", s.beta2);
    take(f, "eps", s.eps);
}

}  // namespace

void PipelineConfig::validate() const {
    solver.validate();
    bins.validate();
    shift.validate();
    zoom.validate();
    view.validate();
    filter.validate();
    grpo.validate();
    if (strata) strata->validate();
}

prompts::PromptTemplateSet PipelineConfig::templates() const {
    return templates_path ? prompts::PromptTemplateSet::load(*templates_path)
                          : prompts::PromptTemplateSet::defaults();
}

PipelineConfig config_from_json(const Json& obj, const std::filesystem::path& base_dir) {
    if (!obj.is_object()) throw ConfigError("config must be a JSON object");
    PipelineConfig cfg;
    try {
        FieldReader f(obj, 0);
        take(f, "seed", cfg.seed);
        section(f, "solver", "", [&](FieldReader& s) {
            take(s, "alpha", cfg.solver.alpha);
            take(s, "beta_loss", cfg.solver.beta_loss);
            take(s, "fallback_threshold", cfg.solver.fallback_threshold);
            take(s, "norm_clip_lo", cfg.solver.norm_clip_lo);
            take(s, "norm_clip_hi", cfg.solver.norm_clip_hi);
            section(s, "lbfgs", "solver", [&](FieldReader& l) { read_lbfgs(l, cfg.solver.lbfgs); });
            section(s, "adam", "solver", [&](FieldReader& a) { read_adam(a, cfg.solver.adam); });
        });
        section(f, "bins", "", [&](FieldReader& s) {
            take(s, "lo", cfg.bins.lo);
            take(s, "hi", cfg.bins.hi);
            take(s, "n_bins", cfg.bins.n_bins);
        });
        section(f, "shift", "", [&](FieldReader& s) {
            take(s, "good_min", cfg.shift.good_min);
            take(s, "poor_max", cfg.shift.poor_max);
            take(s, "mid_score_fraction", cfg.shift.mid_score_fraction);
            take(s, "rotation_max_deg", cfg.shift.rotation_max_deg);
            take(s, "score_gap_min", cfg.shift.score_gap_min);
        });
        section(f, "zoom", "", [&](FieldReader& s) {
            take(s, "good_min", cfg.zoom.good_min);
            take(s, "max_area_ratio", cfg.zoom.max_area_ratio);
        });
        section(f, "view", "", [&](FieldReader& s) {
            take(s, "n_best", cfg.view.n_best);
            take(s, "n_worst", cfg.view.n_worst);
        });
        section(f, "filter", "", [&](FieldReader& s) {
            auto& c = cfg.filter;
            take(s, "aspect_lo", c.aspect_lo);
            take(s, "aspect_hi", c.aspect_hi);
            take(s, "clip_sim_min", c.clip_sim_min);
            take(s, "subject_sim_min", c.subject_sim_min);
            take(s, "contain_area_min", c.contain_area_min);
            take(s, "score_gap_min", c.score_gap_min);
            take(s, "zoom_area_max", c.zoom_area_max);
            take(s, "byte_size_min", c.byte_size_min);
            take(s, "quality_min", c.quality_min);
            take(s, "comp_min", c.comp_min);
            take(s, "banned_keywords", c.banned_keywords);
            take(s, "fov_overlap_min", c.fov_overlap_min);
            if (auto names = s.optional<std::vector<std::string>>("disabled")) {
                c.disabled.clear();
                for (const auto& n : *names) {
                    try {
                        c.disabled.insert(filter::parse_stage(n));
                    } catch (const Error& e) {
                        throw ConfigError(std::string("filter.disabled: ") + e.what());
                    }
                }
            }
        });
        section(f, "grpo", "", [&](FieldReader& s) {
            take(s, "n_rollouts", cfg.grpo.n_rollouts);
            take(s, "score_tol", cfg.grpo.score_tol);
            take(s, "clip_delta", cfg.grpo.clip_delta);
            take(s, "kl_beta", cfg.grpo.kl_beta);
            take(s, "degenerate_std_epsilon", cfg.grpo.degenerate_std_epsilon);
        });
        if (const Json* st = f.raw("strata"); st && !st->is_null()) cfg.strata = resample::strata_from_json(*st);
        section(f, "eval", "", [&](FieldReader& s) {
            if (auto cols = s.optional<std::vector<std::string>>("excluded")) {
                cfg.eval.excluded.clear();
                for (const auto& col : *cols) {
                    const auto slash = col.find('/');
                    if (slash == std::string::npos)
                        throw ConfigError("eval.excluded: expected \"<task>/<comparison>\", got \"" + col + "\"");
                    try {
                        cfg.eval.excluded.emplace(parse_task(col.substr(0, slash)),
                                                  eval::parse_comparison(col.substr(slash + 1)));
                    } catch (const ValidationError& e) {
                        throw ConfigError(std::string("eval.excluded: ") + e.what());
                    }
                }
            }
        });
        if (auto t = f.optional<std::string>("templates")) {
            std::filesystem::path p(*t);
            cfg.templates_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
        }
        f.finish();
    } catch (const ParseError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    Json obj;
    try {
        obj = Json::parse(text);
    } catch (const Json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    try {
        return config_from_json(obj, path.parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

OrderedJson to_json(const PipelineConfig& c) {
    OrderedJson j;
    j["seed"] = c.seed;
    OrderedJson lbfgs{{"lr", c.solver.lbfgs.lr},
                      {"max_epochs", c.solver.lbfgs.max_epochs},
                      {"max_iter", c.solver.lbfgs.max_iter},
                      {"history_size", c.solver.lbfgs.history_size},
                      {"tolerance_grad", c.solver.lbfgs.tolerance_grad},
                      {"tolerance_change", c.solver.lbfgs.tolerance_change},
                      {"armijo_c1", c.solver.lbfgs.armijo_c1},
                      {"wolfe_c2", c.solver.lbfgs.wolfe_c2},
                      {"max_line_evals", c.solver.lbfgs.max_line_evals}};
    OrderedJson adam{{"lr", c.solver.adam.lr},
                     {"max_epochs", c.solver.adam.max_epochs},
                     {"beta1", c.solver.adam.beta1},
                     {"beta2", c.solver.adam.beta2},
                     {"eps", c.solver.adam.eps}};
    j["solver"] = OrderedJson{{"alpha", c.solver.alpha},
                              {"beta_loss", c.solver.beta_loss},
                              {"fallback_threshold", c.solver.fallback_threshold},
                              {"norm_clip_lo", c.solver.norm_clip_lo},
                              {"norm_clip_hi", c.solver.norm_clip_hi},
                              {"lbfgs", lbfgs},
                              {"adam", adam}};
    j["bins"] = OrderedJson{{"lo", c.bins.lo}, {"hi", c.bins.hi}, {"n_bins", c.bins.n_bins}};
    j["shift"] = OrderedJson{{"good_min", c.shift.good_min},
                             {"poor_max", c.shift.poor_max},
                             {"mid_score_fraction", c.shift.mid_score_fraction},
                             {"rotation_max_deg", c.shift.rotation_max_deg},
                             {"score_gap_min", c.shift.score_gap_min}};
    j["zoom"] = OrderedJson{{"good_min", c.zoom.good_min}, {"max_area_ratio", c.zoom.max_area_ratio}};
    j["view"] = OrderedJson{{"n_best", c.view.n_best}, {"n_worst", c.view.n_worst}};
    OrderedJson disabled = OrderedJson::array();
    for (auto s : c.filter.disabled) disabled.push_back(filter::to_string(s));
    j["filter"] = OrderedJson{{"aspect_lo", c.filter.aspect_lo},
                              {"aspect_hi", c.filter.aspect_hi},
                              {"clip_sim_min", c.filter.clip_sim_min},
                              {"subject_sim_min", c.filter.subject_sim_min},
                              {"contain_area_min", c.filter.contain_area_min},
                              {"score_gap_min", c.filter.score_gap_min},
                              {"zoom_area_max", c.filter.zoom_area_max},
                              {"byte_size_min", c.filter.byte_size_min},
                              {"quality_min", c.filter.quality_min},
                              {"comp_min", c.filter.comp_min},
                              {"banned_keywords", c.filter.banned_keywords},
                              {"fov_overlap_min", c.filter.fov_overlap_min},
                              {"disabled", disabled}};
    j["grpo"] = OrderedJson{{"n_rollouts", c.grpo.n_rollouts},
                            {"score_tol", c.grpo.score_tol},
                            {"clip_delta", c.grpo.clip_delta},
                            {"kl_beta", c.grpo.kl_beta},
                            {"degenerate_std_epsilon", c.grpo.degenerate_std_epsilon}};
    if (c.strata) j["strata"] = resample::to_json(*c.strata);
    OrderedJson excluded = OrderedJson::array();
    for (const auto& [task, cmp] : c.eval.excluded)
        excluded.push_back(std::string(to_string(task)) + "/" + std::string(eval::to_string(cmp)));
    j["eval"] = OrderedJson{{"excluded", excluded}};
    if (c.templates_path) j["templates"] = c.templates_path->string();
    return j;
}

}  // namespace compforge
