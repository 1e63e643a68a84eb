#include "segment/segments.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include "core/errors.hpp"

namespace urbanfield::seg {

using nlohmann::json;

void SegmentRecord::validate() const {
    const std::string where = "segment (view " + std::to_string(view_id) + ", level " +
                              std::to_string(level) + ", id " + std::to_string(segment_id) + ")";
    if (level < kMinLevel || level > kMaxLevel) invalid_argument(where + ": level must be 1, 2 or 3");
    if (width <= 0 || height <= 0) invalid_argument(where + ": image size must be positive");
    const std::uint64_t pixels = static_cast<std::uint64_t>(width) * height;
    std::uint64_t end = 0;
    std::uint64_t area = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i];
        if (r.length == 0) invalid_argument(where + ": empty run");
        if (i > 0 && r.start < end) invalid_argument(where + ": runs unsorted or overlapping");
        end = static_cast<std::uint64_t>(r.start) + r.length;
        if (end > pixels) invalid_argument(where + ": run exceeds image bounds");
        area += r.length;
    }
    if (area != area_px) invalid_argument(where + ": area_px does not match runs");
}

std::vector<std::uint8_t> SegmentRecord::bitmap() const {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(width) * height, 0);
    for (const auto& r : runs) {
        std::fill_n(bits.begin() + r.start, r.length, std::uint8_t{1});
    }
    return bits;
}

std::optional<SegmentRecord::Box> SegmentRecord::bounding_box() const {
    if (runs.empty()) return std::nullopt;
    Box b{width, height, -1, -1};
    for (const auto& r : runs) {
        const std::uint32_t last = r.start + r.length - 1;
        const int y0 = static_cast<int>(r.start / width);
        const int y1 = static_cast<int>(last / width);
        b.y0 = std::min(b.y0, y0);
        b.y1 = std::max(b.y1, y1);
        if (y0 != y1) {
            b.x0 = 0;
            b.x1 = width - 1;
        } else {
            b.x0 = std::min(b.x0, static_cast<int>(r.start % width));
            b.x1 = std::max(b.x1, static_cast<int>(last % width));
        }
    }
    return b;
}

SegmentRecord make_segment(std::int64_t view_id, int level, int width, int height,
                           std::vector<Run> runs, int segment_id) {
    SegmentRecord rec;
    rec.view_id = view_id;
    rec.level = level;
    rec.segment_id = segment_id;
    rec.width = width;
    rec.height = height;
    rec.runs = std::move(runs);
    for (const auto& r : rec.runs) rec.area_px += r.length;
    rec.validate();
    return rec;
}

std::vector<Run> encode_runs(std::span<const std::uint8_t> bitmap) {
    std::vector<Run> runs;
    std::size_t i = 0;
    while (i < bitmap.size()) {
        if (!bitmap[i]) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < bitmap.size() && bitmap[i]) ++i;
        runs.push_back({static_cast<std::uint32_t>(start), static_cast<std::uint32_t>(i - start)});
    }
    return runs;
}

std::uint64_t min_area_pixels(std::uint64_t image_pixels, double min_area_frac) {
    if (!(min_area_frac >= 0.0 && min_area_frac <= 1.0)) {
        invalid_argument("min_area_frac must be in [0, 1]");
    }
    return static_cast<std::uint64_t>(std::floor(min_area_frac * static_cast<double>(image_pixels) + 1e-9));
}

std::vector<SegmentRecord> filter_segments(std::vector<SegmentRecord> records,
                                           std::uint64_t image_pixels, double min_area_frac) {
    const auto threshold = min_area_pixels(image_pixels, min_area_frac);
    std::erase_if(records, [threshold](const SegmentRecord& r) { return r.area_px < threshold; });
    return records;
}

void HighlightSpec::validate() const {
    if (outline_width < 1) invalid_argument("outline_width must be at least 1");
    if (!(background_opacity >= 0.0 && background_opacity <= 1.0)) {
        invalid_argument("background_opacity must be in [0, 1]");
    }
    if (!(crop_padding >= 0.0)) invalid_argument("crop_padding must be non-negative");
}

namespace {

// 1 where a mask pixel lies within Chebyshev distance `w` of a non-mask pixel
// or of the image border. Separable min filter over the region of interest.
std::vector<std::uint8_t> interior(const std::vector<std::uint8_t>& mask, int width, int height,
                                   int w, int x0, int y0, int x1, int y1) {
    const int ex0 = std::max(0, x0 - w), ex1 = std::min(width - 1, x1 + w);
    const int rw = x1 - x0 + 1, rh = y1 - y0 + 1;
    const int ew = ex1 - ex0 + 1;
    // Horizontal erosion over rows [y0 - w, y1 + w].
    const int ey0 = y0 - w, ey1 = y1 + w;
    std::vector<std::uint8_t> horiz(static_cast<std::size_t>(ew) * (ey1 - ey0 + 1), 0);
    for (int y = ey0; y <= ey1; ++y) {
        if (y < 0 || y >= height) continue;
        for (int x = ex0; x <= ex1; ++x) {
            std::uint8_t v = 1;
            for (int dx = -w; dx <= w && v; ++dx) {
                const int xx = x + dx;
                v = (xx >= 0 && xx < width) ? mask[static_cast<std::size_t>(y) * width + xx] : 0;
            }
            horiz[static_cast<std::size_t>(y - ey0) * ew + (x - ex0)] = v;
        }
    }
    std::vector<std::uint8_t> out(static_cast<std::size_t>(rw) * rh, 0);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            std::uint8_t v = 1;
            for (int dy = -w; dy <= w && v; ++dy) {
                const int yy = y + dy;
                v = (yy >= 0 && yy < height) ? horiz[static_cast<std::size_t>(yy - ey0) * ew + (x - ex0)] : 0;
            }
            out[static_cast<std::size_t>(y - y0) * rw + (x - x0)] = v;
        }
    }
    return out;
}

}  // namespace

RgbImage crop_and_highlight(const RgbImage& image, const SegmentRecord& record,
                            const HighlightSpec& spec) {
    spec.validate();
    record.validate();
    if (record.width != image.width || record.height != image.height) {
        invalid_argument("mask size does not match the image");
    }
    const auto box = record.bounding_box();
    if (!box) invalid_argument("cannot highlight an empty mask");

    const int pad_x = static_cast<int>(std::lround(spec.crop_padding * (box->x1 - box->x0 + 1)));
    const int pad_y = static_cast<int>(std::lround(spec.crop_padding * (box->y1 - box->y0 + 1)));
    const int x0 = std::max(0, box->x0 - pad_x), x1 = std::min(image.width - 1, box->x1 + pad_x);
    const int y0 = std::max(0, box->y0 - pad_y), y1 = std::min(image.height - 1, box->y1 + pad_y);

    const auto mask = record.bitmap();
    const auto inner = interior(mask, image.width, image.height, spec.outline_width, x0, y0, x1, y1);
    const int cw = x1 - x0 + 1;
    const double keep = spec.background_opacity;
    RgbImage out(cw, y1 - y0 + 1);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const auto* src = image.at(x, y);
            auto* dst = out.at(x - x0, y - y0);
            if (mask[static_cast<std::size_t>(y) * image.width + x]) {
                const bool edge = !inner[static_cast<std::size_t>(y - y0) * cw + (x - x0)];
                for (int c = 0; c < 3; ++c) dst[c] = edge ? spec.outline_color[c] : src[c];
            } else {
                for (int c = 0; c < 3; ++c) {
                    dst[c] = static_cast<std::uint8_t>(std::lround(keep * src[c] + (1.0 - keep) * 255.0));
                }
            }
        }
    }
    return out;
}

PixelLevelMap build_pixel_level_map(std::span<const SegmentRecord> records) {
    PixelLevelMap map;
    if (records.empty()) return map;
    map.width = records.front().width;
    map.height = records.front().height;
    const auto pixels = static_cast<std::size_t>(map.width) * map.height;
    for (auto& level : map.segment) level.assign(pixels, -1);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.view_id != records.front().view_id) invalid_argument("records span multiple views");
        if (r.width != map.width || r.height != map.height) invalid_argument("records differ in image size");
        if (r.level < kMinLevel || r.level > kMaxLevel) invalid_argument("level must be 1, 2 or 3");
        auto& level = map.segment[r.level - 1];
        for (const auto& run : r.runs) {
            for (std::uint32_t p = run.start; p < run.start + run.length; ++p) {
                const auto cur = level[p];
                // Records are visited in index order, so equal areas keep the earlier one.
                if (cur < 0 || r.area_px < records[cur].area_px) level[p] = static_cast<std::int32_t>(i);
            }
        }
    }
    return map;
}

std::vector<SegmentRecord> read_masks(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    std::vector<SegmentRecord> records;
    std::map<std::pair<std::int64_t, int>, int> ordinal;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            std::vector<Run> runs;
            for (const auto& r : j.at("runs")) {
                runs.push_back({r.at(0).get<std::uint32_t>(), r.at(1).get<std::uint32_t>()});
            }
            const auto view_id = j.at("view_id").get<std::int64_t>();
            const int level = j.at("level").get<int>();
            int& next = ordinal[{view_id, level}];
            const int id = j.contains("segment_id") ? j.at("segment_id").get<int>() : next;
            next = std::max(next, id) + 1;
            auto rec = make_segment(view_id, level, j.at("width").get<int>(),
                                    j.at("height").get<int>(), std::move(runs), id);
            if (j.contains("embedding") && !j["embedding"].is_null()) {
                rec.embedding = j["embedding"].get<std::vector<float>>();
                if (rec.embedding->empty()) throw std::runtime_error("empty embedding");
            }
            records.push_back(std::move(rec));
        } catch (const std::exception& e) {
            fail(ErrorCode::Format, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

void write_masks(std::span<const SegmentRecord> records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    for (const auto& r : records) {
        json runs = json::array();
        for (const auto& run : r.runs) runs.push_back({run.start, run.length});
        json j{{"view_id", r.view_id}, {"level", r.level},   {"segment_id", r.segment_id},
               {"width", r.width},     {"height", r.height}, {"runs", std::move(runs)}};
        if (r.embedding) j["embedding"] = *r.embedding;
        out << j.dump() << '\n';
    }
    if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace urbanfield::seg
