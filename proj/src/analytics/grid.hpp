#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "core/types.hpp"

namespace urbanfield::analytics {

inline constexpr double kDefaultCellSize = 10.0;

// Row-major cells; row r spans y in [origin.y + r*cell, origin.y + (r+1)*cell).
struct GridRaster {
    Vec2 origin;
    double cell_size = kDefaultCellSize;
    int width = 0;
    int height = 0;
    std::vector<double> values;          // NaN where missing
    std::vector<std::uint8_t> observed;  // 1 where at least one sample fell in the cell
    bool fallback_fill = false;          // interpolation fell back to a degenerate-case rule

    std::size_t cell_count() const { return static_cast<std::size_t>(width) * height; }
    std::size_t index(int col, int row) const { return static_cast<std::size_t>(row) * width + col; }
    Vec2 cell_center(int col, int row) const {
        return {origin.x + (col + 0.5) * cell_size, origin.y + (row + 0.5) * cell_size};
    }
    // Cell containing (x, y), or false when outside the raster.
    bool locate(const Vec2& p, int& col, int& row) const;
    std::size_t observed_count() const;
};

// Mean of the observed field values per cell over the padded bounding box of
// the observed points.
GridRaster project_scores_to_grid(const PointCloud& points, const ScoreField& field,
                                  double cell_size = kDefaultCellSize);
GridRaster project_values_to_grid(std::span<const Vec2> positions, std::span<const double> values,
                                  double cell_size = kDefaultCellSize);

// Fills missing cells: linear over a triangulation of observed cell centers
// inside their convex hull, nearest observed value outside. Fewer than three
// or collinear observed cells fall back to interpolation along the line
// (clamped at its ends) and set fallback_fill.
GridRaster interpolate_grid(const GridRaster& raster);

// Triangulation of integer lattice points (exact predicates, Delaunay via
// edge flips). Triangles are counter-clockwise index triples.
struct LatticePoint {
    std::int64_t x = 0;
    std::int64_t y = 0;
};
std::vector<std::array<int, 3>> triangulate(std::span<const LatticePoint> points);

}  // namespace urbanfield::analytics
