#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "core/image.hpp"

namespace urbanfield::seg {

inline constexpr int kMinLevel = 1;
inline constexpr int kMaxLevel = 3;
inline constexpr double kDefaultMinAreaFraction = 0.0025;

struct Run {
    std::uint32_t start = 0;   // row-major pixel index
    std::uint32_t length = 0;
    friend bool operator==(const Run&, const Run&) = default;
};

// Image-space mask of one segment at one hierarchy level.
struct SegmentRecord {
    std::int64_t view_id = 0;
    int level = 1;
    int segment_id = 0;  // ordinal within (view_id, level) unless given explicitly
    int width = 0;
    int height = 0;
    std::vector<Run> runs;
    std::uint64_t area_px = 0;
    std::optional<std::vector<float>> embedding;

    // Runs sorted, non-overlapping, in bounds, area consistent.
    void validate() const;
    std::vector<std::uint8_t> bitmap() const;

    struct Box {
        int x0, y0, x1, y1;  // inclusive
    };
    std::optional<Box> bounding_box() const;
};

// Builds a record from runs, computing area_px.
SegmentRecord make_segment(std::int64_t view_id, int level, int width, int height,
                           std::vector<Run> runs, int segment_id = 0);
// Run-length encodes a row-major bitmap.
std::vector<Run> encode_runs(std::span<const std::uint8_t> bitmap);

// Smallest admissible area. The boundary is floor(frac * pixels), so a 512x512
// image keeps 655 px masks at the default fraction.
std::uint64_t min_area_pixels(std::uint64_t image_pixels, double min_area_frac);

std::vector<SegmentRecord> filter_segments(std::vector<SegmentRecord> records,
                                           std::uint64_t image_pixels,
                                           double min_area_frac = kDefaultMinAreaFraction);

struct HighlightSpec {
    std::array<std::uint8_t, 3> outline_color{255, 0, 0};
    int outline_width = 2;
    double background_opacity = 0.4;
    double crop_padding = 0.05;

    void validate() const;
};

// Crops the segment's padded bounding box. Background pixels fade toward white
// by (1 - background_opacity); mask pixels within outline_width of the mask
// edge (image border included) take the outline color.
RgbImage crop_and_highlight(const RgbImage& image, const SegmentRecord& record,
                            const HighlightSpec& spec);

// Per level 1..3, the covering record index for every pixel (-1 = none).
// Same-level overlaps go to the smallest area, then to the lowest index.
struct PixelLevelMap {
    int width = 0;
    int height = 0;
    std::array<std::vector<std::int32_t>, 3> segment;

    std::int32_t at(int level, std::size_t pixel) const { return segment[level - 1][pixel]; }
};

PixelLevelMap build_pixel_level_map(std::span<const SegmentRecord> records);

// Masks JSON lines: {"view_id", "level", "runs": [[start, len], ...], "width", "height"}
// with optional "segment_id" and "embedding".
std::vector<SegmentRecord> read_masks(const std::filesystem::path& path);
void write_masks(std::span<const SegmentRecord> records, const std::filesystem::path& path);

}  // namespace urbanfield::seg
