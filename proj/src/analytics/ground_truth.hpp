#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "analytics/district.hpp"
#include "core/geo.hpp"

namespace urbanfield::analytics {

struct PointLabel {
    std::string id;
    Vec2 position;  // local meters
    double value = 0.0;
    std::string unit;
};

// Minimal RFC 4180 reader: comma separated, double-quoted fields may contain
// commas and doubled quotes. Returns rows including the header.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

// Header must contain id, lat, lon, value, unit (any order).
std::vector<PointLabel> read_point_labels_csv(const std::filesystem::path& path, const GeoTransform& gt);

// Header must contain lat, lon, year. Each event weighs 1/(number of distinct
// observation years spanned, max - min + 1).
std::vector<CrimeEvent> read_crime_csv(const std::filesystem::path& path, const GeoTransform& gt);

// FeatureCollection of Polygon/MultiPolygon features with [lon, lat] rings.
// Properties "id" (string or number), "value" and "unit" are optional; ids
// default to the feature index. Only outer rings are used.
DistrictSet parse_districts_geojson(const std::string& text, const GeoTransform& gt);
DistrictSet read_districts_geojson(const std::filesystem::path& path, const GeoTransform& gt);
std::string districts_to_geojson(const DistrictSet& districts, const GeoTransform& gt);

// Binary footprint label per raster cell: 1 when the cell center lies inside
// any footprint polygon.
std::vector<int> footprint_cell_labels(const DistrictSet& footprints, const Vec2& origin, double cell_size,
                                       int width, int height);

}  // namespace urbanfield::analytics
