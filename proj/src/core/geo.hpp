#pragma once

#include "core/types.hpp"

namespace urbanfield {

inline constexpr double kEarthRadiusMeters = 6371000.0;

// Equirectangular mapping between WGS84 degrees and a local east-north frame.
struct GeoTransform {
    double origin_lat = 0.0;
    double origin_lon = 0.0;
    double meters_per_deg_lat = 0.0;
    double meters_per_deg_lon = 0.0;

    // Spherical-earth scale factors about (lat, lon); longitude scaled by cos(lat).
    static GeoTransform about(double lat, double lon);
    // Centered on the midpoint of a lat/lon box.
    static GeoTransform for_bounds(double lat_min, double lat_max, double lon_min, double lon_max);

    void validate() const;
};

Vec2 geo_to_local(double lat, double lon, const GeoTransform& gt);

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;
};

LatLon local_to_geo(const Vec2& p, const GeoTransform& gt);

}  // namespace urbanfield
