#include "analytics/ground_truth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "core/errors.hpp"

namespace urbanfield::analytics {

namespace {

using json = nlohmann::json;

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::map<std::string, std::size_t> header_index(const std::vector<std::string>& header,
                                                std::initializer_list<const char*> required,
                                                const std::string& file) {
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string name = trim(header[i]);
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
        idx[name] = i;
    }
    for (const char* r : required) {
        if (!idx.count(r)) fail(ErrorCode::Format, file + ": missing column '" + r + "'");
    }
    return idx;
}

double parse_number(const std::string& s, const std::string& where) {
    const std::string t = trim(s);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (t.empty() || used != t.size() || !std::isfinite(v)) {
        fail(ErrorCode::Format, where + ": not a finite number '" + t + "'");
    }
    return v;
}

Polygon ring_from_json(const json& ring, const GeoTransform& gt, const std::string& where) {
    if (!ring.is_array()) fail(ErrorCode::Format, where + ": ring is not an array");
    Polygon poly;
    for (const auto& c : ring) {
        if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) {
            fail(ErrorCode::Format, where + ": coordinate must be [lon, lat]");
        }
        poly.push_back(geo_to_local(c[1].get<double>(), c[0].get<double>(), gt));
    }
    // GeoJSON repeats the first vertex at the end.
    if (poly.size() > 1 && poly.front().x == poly.back().x && poly.front().y == poly.back().y) poly.pop_back();
    return poly;
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n') {
            row.push_back(std::move(field));
            field.clear();
            if (!(row.size() == 1 && trim(row[0]).empty())) rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else if (c != '\r') {
            field += c;
            any = true;
        }
    }
    if (quoted) fail(ErrorCode::Format, "unterminated quoted CSV field");
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<PointLabel> read_point_labels_csv(const std::filesystem::path& path, const GeoTransform& gt) {
    const auto rows = parse_csv(slurp(path));
    const std::string file = path.string();
    if (rows.empty()) fail(ErrorCode::Format, file + ": empty file");
    const auto idx = header_index(rows[0], {"id", "lat", "lon", "value", "unit"}, file);
    std::vector<PointLabel> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string where = file + ":" + std::to_string(r + 1);
        if (row.size() != rows[0].size()) fail(ErrorCode::Format, where + ": wrong number of fields");
        PointLabel label;
        label.id = trim(row[idx.at("id")]);
        const double lat = parse_number(row[idx.at("lat")], where);
        const double lon = parse_number(row[idx.at("lon")], where);
        label.position = geo_to_local(lat, lon, gt);
        label.value = parse_number(row[idx.at("value")], where);
        label.unit = trim(row[idx.at("unit")]);
        out.push_back(std::move(label));
    }
    return out;
}

std::vector<CrimeEvent> read_crime_csv(const std::filesystem::path& path, const GeoTransform& gt) {
    const auto rows = parse_csv(slurp(path));
    const std::string file = path.string();
    if (rows.empty()) fail(ErrorCode::Format, file + ": empty file");
    const auto idx = header_index(rows[0], {"lat", "lon", "year"}, file);
    std::vector<CrimeEvent> out;
    std::vector<double> years;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string where = file + ":" + std::to_string(r + 1);
        if (row.size() != rows[0].size()) fail(ErrorCode::Format, where + ": wrong number of fields");
        const double lat = parse_number(row[idx.at("lat")], where);
        const double lon = parse_number(row[idx.at("lon")], where);
        const double year = parse_number(row[idx.at("year")], where);
        if (year != std::floor(year)) fail(ErrorCode::Format, where + ": year must be an integer");
        out.push_back({geo_to_local(lat, lon, gt), 1.0});
        years.push_back(year);
    }
    if (!out.empty()) {
        const auto [lo, hi] = std::minmax_element(years.begin(), years.end());
        const double weight = 1.0 / (*hi - *lo + 1.0);
        for (auto& e : out) e.weight = weight;
    }
    return out;
}

DistrictSet parse_districts_geojson(const std::string& text, const GeoTransform& gt) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::Format, std::string("GeoJSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
        !doc["features"].is_array()) {
        fail(ErrorCode::Format, "GeoJSON: expected a FeatureCollection");
    }
    DistrictSet set;
    std::size_t index = 0;
    for (const auto& f : doc["features"]) {
        const std::string where = "GeoJSON feature " + std::to_string(index);
        if (!f.is_object() || !f.contains("geometry") || !f["geometry"].is_object()) {
            fail(ErrorCode::Format, where + ": missing geometry");
        }
        const auto& g = f["geometry"];
        const std::string type = g.value("type", "");
        if (!g.contains("coordinates")) fail(ErrorCode::Format, where + ": missing coordinates");
        const auto& coords = g["coordinates"];
        District d;
        if (type == "Polygon") {
            if (!coords.is_array() || coords.empty()) fail(ErrorCode::Format, where + ": empty polygon");
            d.rings.push_back(ring_from_json(coords[0], gt, where));
        } else if (type == "MultiPolygon") {
            if (!coords.is_array() || coords.empty()) fail(ErrorCode::Format, where + ": empty multipolygon");
            for (const auto& poly : coords) {
                if (!poly.is_array() || poly.empty()) fail(ErrorCode::Format, where + ": empty polygon");
                d.rings.push_back(ring_from_json(poly[0], gt, where));
            }
        } else {
            fail(ErrorCode::Format, where + ": unsupported geometry type '" + type + "'");
        }
        d.id = std::to_string(index);
        if (f.contains("properties") && f["properties"].is_object()) {
            const auto& p = f["properties"];
            if (p.contains("id")) d.id = p["id"].is_string() ? p["id"].get<std::string>() : p["id"].dump();
            if (p.contains("value") && p["value"].is_number()) d.value = p["value"].get<double>();
            if (p.contains("unit") && p["unit"].is_string()) d.unit = p["unit"].get<std::string>();
        }
        set.districts.push_back(std::move(d));
        ++index;
    }
    set.validate();
    return set;
}

DistrictSet read_districts_geojson(const std::filesystem::path& path, const GeoTransform& gt) {
    return parse_districts_geojson(slurp(path), gt);
}

std::string districts_to_geojson(const DistrictSet& districts, const GeoTransform& gt) {
    json features = json::array();
    for (const auto& d : districts.districts) {
        json polys = json::array();
        for (const auto& ring : d.rings) {
            json coords = json::array();
            for (std::size_t i = 0; i <= ring.size(); ++i) {
                const auto ll = local_to_geo(ring[i % ring.size()], gt);
                coords.push_back({ll.lon, ll.lat});
            }
            polys.push_back(json::array({coords}));
        }
        json geometry = d.rings.size() == 1 ? json{{"type", "Polygon"}, {"coordinates", polys[0]}}
                                            : json{{"type", "MultiPolygon"}, {"coordinates", polys}};
        features.push_back({{"type", "Feature"},
                            {"properties", {{"id", d.id}, {"value", d.value}, {"unit", d.unit}}},
                            {"geometry", geometry}});
    }
    return json{{"type", "FeatureCollection"}, {"features", features}}.dump();
}

std::vector<int> footprint_cell_labels(const DistrictSet& footprints, const Vec2& origin, double cell_size,
                                       int width, int height) {
    if (!(cell_size > 0.0) || width < 0 || height < 0) invalid_argument("invalid raster geometry");
    std::vector<int> labels(static_cast<std::size_t>(width) * height, 0);
    for (const auto& f : footprints.districts) {
        const auto b = f.bounds();
        const int c0 = std::max(0, static_cast<int>(std::floor((b.min.x - origin.x) / cell_size)));
        const int c1 = std::min(width - 1, static_cast<int>(std::floor((b.max.x - origin.x) / cell_size)));
        const int r0 = std::max(0, static_cast<int>(std::floor((b.min.y - origin.y) / cell_size)));
        const int r1 = std::min(height - 1, static_cast<int>(std::floor((b.max.y - origin.y) / cell_size)));
        for (int r = r0; r <= r1; ++r) {
            for (int c = c0; c <= c1; ++c) {
                const Vec2 center{origin.x + (c + 0.5) * cell_size, origin.y + (r + 0.5) * cell_size};
                if (f.contains(center)) labels[static_cast<std::size_t>(r) * width + c] = 1;
            }
        }
    }
    return labels;
}

}  // namespace urbanfield::analytics
