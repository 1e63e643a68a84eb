#pragma once

#include <span>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace urbanfield::analytics {

using Polygon = std::vector<Vec2>;  // one ring, implicitly closed

// Even-odd rule; points on an edge or vertex count as inside.
bool point_in_polygon(const Vec2& p, std::span<const Vec2> polygon);
// Absolute shoelace area.
double polygon_area(std::span<const Vec2> polygon);
Bounds2 polygon_bounds(std::span<const Vec2> polygon);

struct District {
    std::string id;
    std::vector<Polygon> rings;  // disjoint parts; holes are not modelled
    double value = 0.0;
    std::string unit;

    bool contains(const Vec2& p) const;
    double area() const;
    Bounds2 bounds() const;
};

struct DistrictSet {
    std::vector<District> districts;

    // Unique ids, at least three vertices per ring, finite coordinates,
    // no self-intersecting rings.
    void validate() const;
    std::size_t size() const { return districts.size(); }
};

bool ring_is_simple(std::span<const Vec2> ring);

struct DistrictEmbeddings {
    std::vector<std::vector<float>> means;  // empty vector for empty districts
    std::vector<std::size_t> counts;
    std::vector<std::uint8_t> empty;
};

// Mean feature of the observed points at `level` whose xy falls inside each
// district. Sums are exact, so the result does not depend on point order.
DistrictEmbeddings district_average_embeddings(const FeatureStore& store, const DistrictSet& districts,
                                               std::size_t level);

struct CrimeEvent {
    Vec2 position;
    double weight = 1.0;  // events per year
};

inline constexpr double kCrimeSigma = 50.0;

struct CrimeDensity {
    std::vector<double> per_km2_year;   // integral / area, per square kilometre
    std::vector<double> integral;       // events per year inside the district
};

// Each event is an isotropic Gaussian of std `sigma`. The plane is divided into
// square cells of side sigma/5 anchored at the origin. Cells away from the
// district boundary are classified by their midpoint; cells crossed by a
// boundary edge are split 16 x 16 and classified per sub-cell. Each cell or
// sub-cell contributes its exact Gaussian mass.
CrimeDensity crime_density(std::span<const CrimeEvent> events, const DistrictSet& districts,
                           double sigma = kCrimeSigma);

}  // namespace urbanfield::analytics
