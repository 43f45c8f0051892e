#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "compforge/manifest.hpp"

namespace compforge::prompts {

enum class PromptKind { Shift, ZoomIn, ViewChange, StaticAuto, FullAuto, Degradation };

inline constexpr std::array<PromptKind, 6> kAllPromptKinds{
    PromptKind::Shift,      PromptKind::ZoomIn,   PromptKind::ViewChange,
    PromptKind::StaticAuto, PromptKind::FullAuto, PromptKind::Degradation,
};

std::string_view to_string(PromptKind k);
PromptKind parse_prompt_kind(std::string_view s);
PromptKind prompt_kind(Task t);

/// Task-prompt templates, one non-empty list per prompt kind.
class PromptTemplateSet {
public:
    /// The built-in set.
    static PromptTemplateSet defaults();

    /// Reads {"shift": [...], "zoom_in": [...], ...}. Every kind must be
    /// present with at least one template; unknown kinds are rejected.
    static PromptTemplateSet from_json(const Json& obj);
    static PromptTemplateSet load(const std::filesystem::path& path);

    const std::vector<std::string>& templates(PromptKind k) const;
    void set(PromptKind k, std::vector<std::string> templates);

    /// Throws ConfigError on an empty list or a template with an unfilled
    /// "{...}" placeholder.
    void validate() const;

private:
    std::array<std::vector<std::string>, kAllPromptKinds.size()> lists_;
};

/// Uniform template choice seeded by (seed, pair_id); deterministic per pair.
const std::string& sample_prompt(PromptKind kind, const PromptTemplateSet& set, std::uint64_t seed,
                                 std::string_view pair_id);

}  // namespace compforge::prompts
