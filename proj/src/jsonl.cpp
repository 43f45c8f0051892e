#include "compforge/jsonl.hpp"

#include <fstream>
#include <sstream>

namespace compforge {

namespace {

bool is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn) {
    for_each_jsonl_text(read_text(path), fn);
}

void for_each_jsonl_text(std::string_view text,
                         const std::function<void(const Json&, std::size_t)>& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (is_blank(line)) continue;
        Json obj;
        try {
            obj = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
        }
        if (!obj.is_object()) throw ParseError("expected a JSON object", line_no);
        fn(obj, line_no);
    }
}

std::string to_jsonl(const std::vector<OrderedJson>& rows) {
    std::string out;
    for (const auto& r : rows) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<OrderedJson>& rows) {
    write_text(path, to_jsonl(rows));
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw IoError("write failure on " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

FieldReader::FieldReader(const Json& obj, std::size_t line) : obj_(obj), line_(line) {}

const Json* FieldReader::find(const std::string& key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return nullptr;
    used_.insert(key);
    return &*it;
}

void FieldReader::finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
        if (!used_.count(it.key())) throw ParseError("unknown key \"" + it.key() + "\"", line_);
    }
}

void FieldReader::fail_missing(const std::string& key) const {
    throw ParseError("missing required key \"" + key + "\"", line_);
}

void FieldReader::fail_type(const std::string& key, const std::string& detail) const {
    throw ParseError("bad value for \"" + key + "\": " + detail, line_);
}

}  // namespace compforge
