#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "analytics/district.hpp"
#include "core/rng.hpp"
#include "core/types.hpp"
#include "segment/segments.hpp"
#include "view/views.hpp"

namespace urbanfield::synth {

enum class SurfaceClass : std::uint8_t { Ground = 0, Road = 1, Building = 2, Tree = 3 };

// Semantic identity of one triangle, used to derive exact segment masks.
struct TriangleLabel {
    SurfaceClass cls = SurfaceClass::Ground;
    std::int32_t object = -1;  // building / tree index, ground tile index
    std::int32_t part = 0;     // face or sub-tile within the object
    bool in_city = true;       // false for the surrounding apron
    bool hidden = false;       // ground under a building footprint
};

struct CityParams {
    double size = 500.0;        // square city side, meters
    double block = 100.0;       // block pitch; the first `road_width` of each block is road
    double road_width = 10.0;
    double cell = 10.0;         // lot grid; footprints are inset 0.5 m inside whole cells
    int buildings_per_block = 3;
    int min_building_cells = 2;
    int max_building_cells = 4;
    double min_building_height = 8.0;
    double max_building_height = 30.0;
    double tree_probability = 0.15;  // per free lot cell
    double apron = 1000.0;           // ground extending past the city on every side
    // Fraction of buildings colored red instead of blue.
    double red_building_fraction = 0.0;
};

struct SyntheticCity {
    CityParams params;
    TriangleMesh mesh;
    std::vector<TriangleLabel> labels;          // one per triangle
    analytics::DistrictSet footprints;          // building footprints, ids "b<index>"
    std::vector<std::uint8_t> building_is_red;  // per building
    Bounds2 bounds;                             // city extent without the apron
};

// Blocks of lots separated by roads, blue box buildings (optionally some red),
// green box trees and gray ground, with a flat gray apron around the city.
SyntheticCity generate_city(const CityParams& params, SeededRng& rng);

// Area-weighted uniform samples on visible in-city surfaces.
PointCloud sample_surface_points(const SyntheticCity& city, std::size_t count, SeededRng& rng);

// Per-triangle labels in a small "OC3L" container: version u32, count u64,
// 4 reserved, then per triangle class u8, flags u8 (bit0 in_city, bit1 hidden),
// 2 reserved, object i32, part i32.
void write_labels(const std::vector<TriangleLabel>& labels, const std::filesystem::path& path);
std::vector<TriangleLabel> read_labels(const std::filesystem::path& path);

// Ground-truth segmentation from a triangle-id buffer: level 1 groups by
// surface class, level 2 by object, level 3 by face or sub-tile. Apron pixels
// are grouped with the ground. Unfiltered.
std::vector<seg::SegmentRecord> synthetic_segments(const view::RenderedView& view,
                                                   const std::vector<TriangleLabel>& labels);

}  // namespace urbanfield::synth
