#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "compforge/error.hpp"

namespace compforge {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

/// Calls `fn(object, line_number)` for every non-blank line of a JSONL file.
/// Line numbers are 1-based. Lines that are not JSON objects raise ParseError.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn);
void for_each_jsonl_text(std::string_view text,
                         const std::function<void(const Json&, std::size_t)>& fn);

/// Writes one compact object per line, '\n' terminated.
void write_jsonl(const std::filesystem::path& path, const std::vector<OrderedJson>& rows);
std::string to_jsonl(const std::vector<OrderedJson>& rows);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

/// Strict field access over one JSON object: every key must be consumed or
/// finish() rejects the object. Type mismatches raise ParseError with the
/// line number attached.
class FieldReader {
public:
    FieldReader(const Json& obj, std::size_t line);

    template <typename T>
    T required(const std::string& key) {
        const Json* v = find(key);
        if (!v) fail_missing(key);
        return convert<T>(key, *v);
    }

    template <typename T>
    std::optional<T> optional(const std::string& key) {
        const Json* v = find(key);
        if (!v || v->is_null()) return std::nullopt;
        return convert<T>(key, *v);
    }

    const Json* raw(const std::string& key) { return find(key); }
    bool has(const std::string& key) const { return obj_.contains(key); }

    void finish() const;
    std::size_t line() const noexcept { return line_; }

    [[noreturn]] void fail_missing(const std::string& key) const;
    [[noreturn]] void fail_type(const std::string& key, const std::string& detail) const;

private:
    const Json* find(const std::string& key);

    template <typename T>
    T convert(const std::string& key, const Json& v) const {
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) fail_type(key, "expected a number");
            } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
                if (!v.is_number_integer()) fail_type(key, "expected an integer");
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) fail_type(key, "expected a boolean");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) fail_type(key, "expected a string");
            }
            return v.get<T>();
        } catch (const nlohmann::json::exception& e) {
            fail_type(key, e.what());
        }
    }

    const Json& obj_;
    std::size_t line_;
    std::set<std::string> used_;
};

}  // namespace compforge
