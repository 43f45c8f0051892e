#include "compforge/prompts.hpp"

#include "compforge/error.hpp"
#include "compforge/seeding.hpp"

namespace compforge::prompts {

std::string_view to_string(PromptKind k) {
    switch (k) {
        case PromptKind::Shift: return "shift";
        case PromptKind::ZoomIn: return "zoom_in";
        case PromptKind::ViewChange: return "view_change";
        case PromptKind::StaticAuto: return "static_auto";
        case PromptKind::FullAuto: return "full_auto";
        case PromptKind::Degradation: return "degradation";
    }
    return "shift";
}

PromptKind parse_prompt_kind(std::string_view s) {
    for (PromptKind k : kAllPromptKinds)
        if (to_string(k) == s) return k;
    throw ConfigError("unknown prompt kind \"" + std::string(s) + "\"");
}

PromptKind prompt_kind(Task t) {
    switch (t) {
        case Task::Shift: return PromptKind::Shift;
        case Task::ZoomIn: return PromptKind::ZoomIn;
        case Task::ViewChange: return PromptKind::ViewChange;
    }
    return PromptKind::Shift;
}

PromptTemplateSet PromptTemplateSet::defaults() {
    PromptTemplateSet set;
    set.set(PromptKind::Shift, {"Shift the scene to enhance the composition."});
    set.set(PromptKind::ZoomIn, {"Zoom in to enhance the composition."});
    set.set(PromptKind::ViewChange, {"Change the viewpoint to enhance the composition."});
    set.set(PromptKind::StaticAuto, {"Refine the composition through shift or zoom-in adjustments.",
                                     "Refine the composition using shift or zoom-in."});
    set.set(PromptKind::FullAuto, {"Capture this scene with better composition."});
    set.set(PromptKind::Degradation, {"Change the viewpoint to worsen the composition."});
    return set;
}

PromptTemplateSet PromptTemplateSet::from_json(const Json& obj) {
    if (!obj.is_object()) throw ConfigError("template set must be a JSON object");
    PromptTemplateSet set;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const PromptKind k = parse_prompt_kind(it.key());
        if (!it->is_array()) throw ConfigError("templates for " + it.key() + " must be a list");
        std::vector<std::string> list;
        for (const auto& t : *it) {
            if (!t.is_string()) throw ConfigError("templates for " + it.key() + " must be strings");
            list.push_back(t.get<std::string>());
        }
        set.set(k, std::move(list));
    }
    set.validate();
    return set;
}

PromptTemplateSet PromptTemplateSet::load(const std::filesystem::path& path) {
    try {
        return from_json(Json::parse(read_text(path)));
    } catch (const Json::parse_error& e) {
        throw ConfigError("template file " + path.string() + ": " + e.what());
    }
}

const std::vector<std::string>& PromptTemplateSet::templates(PromptKind k) const {
    return lists_[static_cast<std::size_t>(k)];
}

void PromptTemplateSet::set(PromptKind k, std::vector<std::string> templates) {
    lists_[static_cast<std::size_t>(k)] = std::move(templates);
}

void PromptTemplateSet::validate() const {
    for (PromptKind k : kAllPromptKinds) {
        const auto& list = templates(k);
        if (list.empty()) throw ConfigError("no templates for " + std::string(to_string(k)));
        for (const auto& t : list) {
            if (t.empty()) throw ConfigError("empty template for " + std::string(to_string(k)));
            const auto open = t.find('{');
            if (open != std::string::npos && t.find('}', open) != std::string::npos)
                throw ConfigError("template has an unfilled placeholder: " + t);
        }
    }
}

const std::string& sample_prompt(PromptKind kind, const PromptTemplateSet& set, std::uint64_t seed,
                                 std::string_view pair_id) {
    const auto& list = set.templates(kind);
    if (list.empty()) throw ConfigError("no templates for " + std::string(to_string(kind)));
    std::string key = "prompt:";
    key += pair_id;
    Rng rng = make_rng(seed, key);
    return list[uniform_below(rng, list.size())];
}

}  // namespace compforge::prompts
