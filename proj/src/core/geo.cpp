#include "core/geo.hpp"

#include <numbers>

namespace urbanfield {

GeoTransform GeoTransform::about(double lat, double lon) {
    const double per_deg = 2.0 * std::numbers::pi * kEarthRadiusMeters / 360.0;
    GeoTransform gt{lat, lon, per_deg, per_deg * std::cos(lat * std::numbers::pi / 180.0)};
    gt.validate();
    return gt;
}

GeoTransform GeoTransform::for_bounds(double lat_min, double lat_max, double lon_min,
                                      double lon_max) {
    return about(0.5 * (lat_min + lat_max), 0.5 * (lon_min + lon_max));
}

void GeoTransform::validate() const {
    if (!(meters_per_deg_lat > 0.0) || !(meters_per_deg_lon > 0.0)) {
        invalid_argument("geo transform scale factors must be positive");
    }
    if (!std::isfinite(origin_lat) || !std::isfinite(origin_lon)) {
        invalid_argument("geo transform origin must be finite");
    }
}

Vec2 geo_to_local(double lat, double lon, const GeoTransform& gt) {
    return {(lon - gt.origin_lon) * gt.meters_per_deg_lon,
            (lat - gt.origin_lat) * gt.meters_per_deg_lat};
}

LatLon local_to_geo(const Vec2& p, const GeoTransform& gt) {
    return {gt.origin_lat + p.y / gt.meters_per_deg_lat,
            gt.origin_lon + p.x / gt.meters_per_deg_lon};
}

}  // namespace urbanfield
