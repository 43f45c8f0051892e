#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "compforge/jsonl.hpp"

namespace compforge {

enum class SourceDataset {
    Gaic,
    Cpc,
    Sacd,
    Flms,
    FlickrCrop,
    CuhkCrop,
    Dl3dv,
    UnsplashLite,
    UserCollected,
    Other,
};

enum class Task { Shift, ZoomIn, ViewChange };

std::string_view to_string(SourceDataset s);
std::string_view to_string(Task t);
SourceDataset parse_source_dataset(std::string_view s);
Task parse_task(std::string_view s);

/// Axis-aligned crop in the pixel grid of its parent image.
struct CropRect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    double aspect() const { return static_cast<double>(w) / static_cast<double>(h); }
    std::int64_t area() const { return static_cast<std::int64_t>(w) * h; }
    bool fits_in(int parent_w, int parent_h) const {
        return x >= 0 && y >= 0 && w > 0 && h > 0 && x + w <= parent_w && y + h <= parent_h;
    }
    bool contains(const CropRect& o) const {
        return o.x >= x && o.y >= y && o.x + o.w <= x + w && o.y + o.h <= y + h;
    }
    friend bool operator==(const CropRect&, const CropRect&) = default;
};

struct ImageRef {
    std::string image_id;
    SourceDataset source_dataset = SourceDataset::Other;
    int width_px = 0;
    int height_px = 0;
    std::uint64_t byte_size = 0;
    std::vector<std::string> keywords;
    bool sr_applied = false;  // set by the external super-resolution tool

    double aspect() const { return static_cast<double>(width_px) / height_px; }
    friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

/// One candidate crop of an original image. `score` is the normalized
/// composition score in [1,5] when known; `best_label` marks human-labelled
/// best crops from datasets without per-crop scores.
struct CropRecord {
    std::string crop_id;
    std::string image_id;
    std::optional<int> crop_index;
    CropRect rect;
    std::optional<double> score;
    bool best_label = false;

    friend bool operator==(const CropRecord&, const CropRecord&) = default;
};

/// One side of a pair: a whole image, or a crop of it.
struct PairSide {
    ImageRef image;
    std::optional<CropRect> crop;

    double aspect() const { return crop ? crop->aspect() : image.aspect(); }
    std::int64_t area() const {
        return crop ? crop->area() : static_cast<std::int64_t>(image.width_px) * image.height_px;
    }
    /// Stable reference to the rendered side: the image id, plus a
    /// "#xywh=x,y,w,h" media fragment for crops.
    std::string key() const;

    friend bool operator==(const PairSide&, const PairSide&) = default;
};

struct PairRecord {
    std::string pair_id;
    Task task = Task::Shift;
    PairSide poor;
    PairSide good;
    double rotation_deg = 0.0;
    std::string task_prompt;
    std::optional<std::string> text_guidance;
    std::string provenance;

    friend bool operator==(const PairRecord&, const PairRecord&) = default;
};

/// "<task>:<poor id>:<good id>"
std::string make_pair_id(Task task, std::string_view poor_id, std::string_view good_id);

enum class Stage { Images, Crops, Pairs };
std::string_view to_string(Stage s);

template <typename Record>
struct Manifest {
    std::vector<Record> records;

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

using ImageManifest = Manifest<ImageRef>;
using CropManifest = Manifest<CropRecord>;
using PairManifest = Manifest<PairRecord>;

const std::string& record_id(const ImageRef& r);
const std::string& record_id(const CropRecord& r);
const std::string& record_id(const PairRecord& r);

template <typename Record>
constexpr Stage stage_of();
template <>
constexpr Stage stage_of<ImageRef>() { return Stage::Images; }
template <>
constexpr Stage stage_of<CropRecord>() { return Stage::Crops; }
template <>
constexpr Stage stage_of<PairRecord>() { return Stage::Pairs; }

/// Stage a record object belongs to, judged by its id key.
std::optional<Stage> detect_stage(const Json& obj);

// Wire form. Keys are written in declaration order of the structs above;
// optional fields that are absent are omitted rather than written as null.
OrderedJson to_json(const CropRect& r);
OrderedJson to_json(const ImageRef& r);
OrderedJson to_json(const CropRecord& r);
OrderedJson to_json(const PairSide& s);
OrderedJson to_json(const PairRecord& r);

CropRect crop_rect_from_json(const Json& obj, std::size_t line);
ImageRef image_ref_from_json(const Json& obj, std::size_t line);
CropRecord crop_record_from_json(const Json& obj, std::size_t line);
PairSide pair_side_from_json(const Json& obj, std::size_t line);
PairRecord pair_record_from_json(const Json& obj, std::size_t line);

void validate(const ImageRef& r);
void validate(const PairRecord& r);

/// Sorts ascending by id and rejects duplicate ids.
template <typename Record>
void normalize(Manifest<Record>& m);

/// Reads a JSONL manifest whose records must all belong to the stage of
/// `Record`. Malformed lines raise ParseError with the line number; stage
/// mismatches and duplicate ids raise ValidationError.
template <typename Record>
Manifest<Record> read_manifest(const std::filesystem::path& path);

template <typename Record>
Manifest<Record> parse_manifest(std::string_view text);

template <typename Record>
std::string serialize_manifest(const Manifest<Record>& m);

template <typename Record>
void write_manifest(const Manifest<Record>& m, const std::filesystem::path& path);

}  // namespace compforge
