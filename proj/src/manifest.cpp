#include "compforge/manifest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

namespace compforge {

namespace {

constexpr std::array<std::pair<SourceDataset, std::string_view>, 10> kSources{{
    {SourceDataset::Gaic, "gaic"},
    {SourceDataset::Cpc, "cpc"},
    {SourceDataset::Sacd, "sacd"},
    {SourceDataset::Flms, "flms"},
    {SourceDataset::FlickrCrop, "flickr_crop"},
    {SourceDataset::CuhkCrop, "cuhk_crop"},
    {SourceDataset::Dl3dv, "dl3dv"},
    {SourceDataset::UnsplashLite, "unsplash_lite"},
    {SourceDataset::UserCollected, "user_collected"},
    {SourceDataset::Other, "other"},
}};

constexpr std::array<std::pair<Task, std::string_view>, 3> kTasks{{
    {Task::Shift, "shift"},
    {Task::ZoomIn, "zoom_in"},
    {Task::ViewChange, "view_change"},
}};

template <typename Record>
Record record_from_json(const Json& obj, std::size_t line);

template <>
ImageRef record_from_json<ImageRef>(const Json& obj, std::size_t line) {
    return image_ref_from_json(obj, line);
}
template <>
CropRecord record_from_json<CropRecord>(const Json& obj, std::size_t line) {
    return crop_record_from_json(obj, line);
}
template <>
PairRecord record_from_json<PairRecord>(const Json& obj, std::size_t line) {
    return pair_record_from_json(obj, line);
}

const Json& object_field(FieldReader& f, const std::string& key) {
    const Json* v = f.raw(key);
    if (!v) f.fail_missing(key);
    if (!v->is_object()) f.fail_type(key, "expected an object");
    return *v;
}

}  // namespace

std::string_view to_string(SourceDataset s) {
    for (const auto& [k, v] : kSources)
        if (k == s) return v;
    return "other";
}

std::string_view to_string(Task t) {
    for (const auto& [k, v] : kTasks)
        if (k == t) return v;
    return "shift";
}

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::Images: return "images";
        case Stage::Crops: return "crops";
        case Stage::Pairs: return "pairs";
    }
    return "images";
}

SourceDataset parse_source_dataset(std::string_view s) {
    for (const auto& [k, v] : kSources)
        if (v == s) return k;
    throw ValidationError("unknown source_dataset \"" + std::string(s) + "\"");
}

Task parse_task(std::string_view s) {
    for (const auto& [k, v] : kTasks)
        if (v == s) return k;
    throw ValidationError("unknown task \"" + std::string(s) + "\"");
}

std::string PairSide::key() const {
    if (!crop) return image.image_id;
    return image.image_id + "#xywh=" + std::to_string(crop->x) + "," + std::to_string(crop->y) + "," +
           std::to_string(crop->w) + "," + std::to_string(crop->h);
}

std::string make_pair_id(Task task, std::string_view poor_id, std::string_view good_id) {
    std::string id(to_string(task));
    id += ':';
    id += poor_id;
    id += ':';
    id += good_id;
    return id;
}

const std::string& record_id(const ImageRef& r) { return r.image_id; }
const std::string& record_id(const CropRecord& r) { return r.crop_id; }
const std::string& record_id(const PairRecord& r) { return r.pair_id; }

std::optional<Stage> detect_stage(const Json& obj) {
    if (obj.contains("pair_id")) return Stage::Pairs;
    if (obj.contains("crop_id")) return Stage::Crops;
    if (obj.contains("image_id")) return Stage::Images;
    return std::nullopt;
}

OrderedJson to_json(const CropRect& r) {
    OrderedJson j;
    j["x"] = r.x;
    j["y"] = r.y;
    j["w"] = r.w;
    j["h"] = r.h;
    return j;
}

OrderedJson to_json(const ImageRef& r) {
    OrderedJson j;
    j["image_id"] = r.image_id;
    j["source_dataset"] = to_string(r.source_dataset);
    j["width_px"] = r.width_px;
    j["height_px"] = r.height_px;
    j["byte_size"] = r.byte_size;
    j["keywords"] = r.keywords;
    j["sr_applied"] = r.sr_applied;
    return j;
}

OrderedJson to_json(const CropRecord& r) {
    OrderedJson j;
    j["crop_id"] = r.crop_id;
    j["image_id"] = r.image_id;
    if (r.crop_index) j["crop_index"] = *r.crop_index;
    j["rect"] = to_json(r.rect);
    if (r.score) j["score"] = *r.score;
    j["best_label"] = r.best_label;
    return j;
}

OrderedJson to_json(const PairSide& s) {
    OrderedJson j;
    j["image"] = to_json(s.image);
    if (s.crop) j["crop"] = to_json(*s.crop);
    return j;
}

OrderedJson to_json(const PairRecord& r) {
    OrderedJson j;
    j["pair_id"] = r.pair_id;
    j["task"] = to_string(r.task);
    j["poor"] = to_json(r.poor);
    j["good"] = to_json(r.good);
    j["rotation_deg"] = r.rotation_deg;
    j["task_prompt"] = r.task_prompt;
    if (r.text_guidance) j["text_guidance"] = *r.text_guidance;
    j["provenance"] = r.provenance;
    return j;
}

CropRect crop_rect_from_json(const Json& obj, std::size_t line) {
    FieldReader f(obj, line);
    CropRect r;
    r.x = f.required<int>("x");
    r.y = f.required<int>("y");
    r.w = f.required<int>("w");
    r.h = f.required<int>("h");
    f.finish();
    if (r.x < 0 || r.y < 0 || r.w <= 0 || r.h <= 0)
        throw ParseError("crop rect needs x,y >= 0 and w,h > 0", line);
    return r;
}

ImageRef image_ref_from_json(const Json& obj, std::size_t line) {
    FieldReader f(obj, line);
    ImageRef r;
    r.image_id = f.required<std::string>("image_id");
    try {
        r.source_dataset = parse_source_dataset(f.required<std::string>("source_dataset"));
    } catch (const ValidationError& e) {
        throw ParseError(e.what(), line);
    }
    r.width_px = f.required<int>("width_px");
    r.height_px = f.required<int>("height_px");
    r.byte_size = f.required<std::uint64_t>("byte_size");
    r.keywords = f.optional<std::vector<std::string>>("keywords").value_or(std::vector<std::string>{});
    r.sr_applied = f.optional<bool>("sr_applied").value_or(false);
    f.finish();
    if (r.image_id.empty()) throw ParseError("empty image_id", line);
    if (r.width_px <= 0 || r.height_px <= 0) throw ParseError("image dimensions must be positive", line);
    for (const auto& k : r.keywords) {
        if (std::any_of(k.begin(), k.end(), [](unsigned char c) { return c >= 'A' && c <= 'Z'; }))
            throw ParseError("keywords must be lowercase: \"" + k + "\"", line);
    }
    return r;
}

CropRecord crop_record_from_json(const Json& obj, std::size_t line) {
    FieldReader f(obj, line);
    CropRecord r;
    r.crop_id = f.required<std::string>("crop_id");
    r.image_id = f.required<std::string>("image_id");
    r.crop_index = f.optional<int>("crop_index");
    r.rect = crop_rect_from_json(object_field(f, "rect"), line);
    r.score = f.optional<double>("score");
    r.best_label = f.optional<bool>("best_label").value_or(false);
    f.finish();
    if (r.crop_id.empty()) throw ParseError("empty crop_id", line);
    if (r.score && !std::isfinite(*r.score)) throw ParseError("non-finite score", line);
    return r;
}

PairSide pair_side_from_json(const Json& obj, std::size_t line) {
    FieldReader f(obj, line);
    PairSide s;
    s.image = image_ref_from_json(object_field(f, "image"), line);
    if (f.has("crop")) s.crop = crop_rect_from_json(object_field(f, "crop"), line);
    f.finish();
    return s;
}

PairRecord pair_record_from_json(const Json& obj, std::size_t line) {
    FieldReader f(obj, line);
    PairRecord r;
    r.pair_id = f.required<std::string>("pair_id");
    try {
        r.task = parse_task(f.required<std::string>("task"));
    } catch (const ValidationError& e) {
        throw ParseError(e.what(), line);
    }
    r.poor = pair_side_from_json(object_field(f, "poor"), line);
    r.good = pair_side_from_json(object_field(f, "good"), line);
    r.rotation_deg = f.required<double>("rotation_deg");
    r.task_prompt = f.required<std::string>("task_prompt");
    r.text_guidance = f.optional<std::string>("text_guidance");
    r.provenance = f.required<std::string>("provenance");
    f.finish();
    if (r.pair_id.empty()) throw ParseError("empty pair_id", line);
    return r;
}

void validate(const ImageRef& r) {
    if (r.image_id.empty()) throw ValidationError("empty image_id");
    if (r.width_px <= 0 || r.height_px <= 0)
        throw ValidationError("image " + r.image_id + " has nonpositive dimensions");
}

void validate(const PairRecord& r) {
    validate(r.poor.image);
    validate(r.good.image);
    for (const PairSide* side : {&r.poor, &r.good}) {
        if (side->crop && !side->crop->fits_in(side->image.width_px, side->image.height_px))
            throw ValidationError("pair " + r.pair_id + ": crop exceeds parent " + side->image.image_id);
    }
    if (r.rotation_deg != 0.0 && r.task != Task::Shift)
        throw ValidationError("pair " + r.pair_id + ": rotation_deg is only allowed on shift pairs");
    if (!std::isfinite(r.rotation_deg)) throw ValidationError("pair " + r.pair_id + ": non-finite rotation");
    if (r.text_guidance && r.text_guidance->empty())
        throw ValidationError("pair " + r.pair_id + ": empty text_guidance");
}

namespace {

void validate_record(const ImageRef& r) { validate(r); }
void validate_record(const PairRecord& r) { validate(r); }
void validate_record(const CropRecord& r) {
    if (r.crop_id.empty()) throw ValidationError("empty crop_id");
}

}  // namespace

template <typename Record>
void normalize(Manifest<Record>& m) {
    std::sort(m.records.begin(), m.records.end(),
              [](const Record& a, const Record& b) { return record_id(a) < record_id(b); });
    for (std::size_t i = 1; i < m.records.size(); ++i) {
        if (record_id(m.records[i - 1]) == record_id(m.records[i]))
            throw ValidationError("duplicate id \"" + record_id(m.records[i]) + "\"");
    }
}

template <typename Record>
Manifest<Record> parse_manifest(std::string_view text) {
    Manifest<Record> m;
    constexpr Stage expected = stage_of<Record>();
    for_each_jsonl_text(text, [&](const Json& obj, std::size_t line) {
        const auto stage = detect_stage(obj);
        if (!stage) {
            // Missing id key: report as a malformed record rather than a stage mismatch.
            const char* key = expected == Stage::Pairs ? "pair_id"
                              : expected == Stage::Crops ? "crop_id"
                                                         : "image_id";
            throw ParseError(std::string("missing required key \"") + key + "\"", line);
        }
        if (*stage != expected) {
            throw ValidationError("line " + std::to_string(line) + ": record belongs to stage " +
                                  std::string(to_string(*stage)) + ", expected " +
                                  std::string(to_string(expected)));
        }
        m.records.push_back(record_from_json<Record>(obj, line));
        try {
            validate_record(m.records.back());
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(line) + ": " + e.what());
        }
    });
    normalize(m);
    return m;
}

template <typename Record>
Manifest<Record> read_manifest(const std::filesystem::path& path) {
    return parse_manifest<Record>(read_text(path));
}

template <typename Record>
std::string serialize_manifest(const Manifest<Record>& m) {
    std::vector<OrderedJson> rows;
    rows.reserve(m.records.size());
    for (const auto& r : m.records) rows.push_back(to_json(r));
    return to_jsonl(rows);
}

template <typename Record>
void write_manifest(const Manifest<Record>& m, const std::filesystem::path& path) {
    Manifest<Record> sorted = m;
    normalize(sorted);
    write_text(path, serialize_manifest(sorted));
}

#define COMPFORGE_INSTANTIATE(R)                                                   \
    template void normalize<R>(Manifest<R>&);                                      \
    template Manifest<R> parse_manifest<R>(std::string_view);                      \
    template Manifest<R> read_manifest<R>(const std::filesystem::path&);           \
    template std::string serialize_manifest<R>(const Manifest<R>&);                \
    template void write_manifest<R>(const Manifest<R>&, const std::filesystem::path&);

COMPFORGE_INSTANTIATE(ImageRef)
COMPFORGE_INSTANTIATE(CropRecord)
COMPFORGE_INSTANTIATE(PairRecord)

#undef COMPFORGE_INSTANTIATE

}  // namespace compforge
