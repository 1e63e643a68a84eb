#include "analytics/district.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "core/errors.hpp"
#include "core/parallel.hpp"

namespace urbanfield::analytics {

namespace {

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
    if (cross(a, b, p) != 0.0) return false;
    return p.x >= std::min(a.x, b.x) && p.x <= std::max(a.x, b.x) && p.y >= std::min(a.y, b.y) &&
           p.y <= std::max(a.y, b.y);
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    const int d1 = sign(cross(c, d, a)), d2 = sign(cross(c, d, b));
    const int d3 = sign(cross(a, b, c)), d4 = sign(cross(a, b, d));
    if (d1 * d2 < 0 && d3 * d4 < 0) return true;
    return (d1 == 0 && on_segment(a, c, d)) || (d2 == 0 && on_segment(b, c, d)) ||
           (d3 == 0 && on_segment(c, a, b)) || (d4 == 0 && on_segment(d, a, b));
}

// Gaussian mass of [a, b] for N(mu, sigma^2), computed on the tail that keeps
// precision far from the mean.
double interval_mass(double a, double b, double mu, double sigma) {
    const double s = sigma * std::sqrt(2.0);
    const double ta = (a - mu) / s, tb = (b - mu) / s;
    if (ta >= 0.0) return 0.5 * (std::erfc(ta) - std::erfc(tb));
    if (tb <= 0.0) return 0.5 * (std::erfc(-tb) - std::erfc(-ta));
    return 0.5 * (std::erf(tb) - std::erf(ta));
}

constexpr std::size_t kSubdivision = 16;

// Cells of the h-grid (origin i0*h, j0*h; nx by ny) touched by any ring edge.
// Every other cell lies entirely on one side of the district boundary.
std::vector<std::uint8_t> boundary_cells(const District& district, double h, std::int64_t i0, std::int64_t j0,
                                         std::size_t nx, std::size_t ny) {
    std::vector<std::uint8_t> out(nx * ny, 0);
    auto mark = [&](double x, double y) {
        const auto i = static_cast<std::int64_t>(std::floor(x / h)) - i0;
        const auto j = static_cast<std::int64_t>(std::floor(y / h)) - j0;
        for (std::int64_t dj = -1; dj <= 1; ++dj) {
            for (std::int64_t di = -1; di <= 1; ++di) {
                const auto ii = i + di, jj = j + dj;
                if (ii < 0 || jj < 0 || ii >= static_cast<std::int64_t>(nx) || jj >= static_cast<std::int64_t>(ny)) continue;
                out[static_cast<std::size_t>(jj) * nx + static_cast<std::size_t>(ii)] = 1;
            }
        }
    };
    for (const auto& ring : district.rings) {
        for (std::size_t k = 0; k < ring.size(); ++k) {
            const Vec2& a = ring[k];
            const Vec2& b = ring[(k + 1) % ring.size()];
            // Samples closer than a cell side; marking the 3x3 neighbourhood of
            // each sample covers every cell the segment passes through.
            const double len = std::hypot(b.x - a.x, b.y - a.y);
            const auto steps = static_cast<std::size_t>(std::ceil(len / (0.5 * h))) + 1;
            for (std::size_t t = 0; t <= steps; ++t) {
                const double f = static_cast<double>(t) / static_cast<double>(steps);
                mark(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y));
            }
        }
    }
    return out;
}

}  // namespace

bool point_in_polygon(const Vec2& p, std::span<const Vec2> polygon) {
    const std::size_t n = polygon.size();
    if (n < 3) return false;
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = polygon[i];
        const Vec2& b = polygon[j];
        if (on_segment(p, a, b)) return true;
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x) inside = !inside;
        }
    }
    return inside;
}

double polygon_area(std::span<const Vec2> polygon) {
    double twice = 0.0;
    for (std::size_t i = 0, j = polygon.size() - 1; i < polygon.size(); j = i++) {
        twice += polygon[j].x * polygon[i].y - polygon[i].x * polygon[j].y;
    }
    return 0.5 * std::abs(twice);
}

Bounds2 polygon_bounds(std::span<const Vec2> polygon) {
    Bounds2 b{{INFINITY, INFINITY}, {-INFINITY, -INFINITY}};
    for (const auto& v : polygon) {
        b.min.x = std::min(b.min.x, v.x);
        b.min.y = std::min(b.min.y, v.y);
        b.max.x = std::max(b.max.x, v.x);
        b.max.y = std::max(b.max.y, v.y);
    }
    return b;
}

bool ring_is_simple(std::span<const Vec2> ring) {
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = ring[i];
        const Vec2& b = ring[(i + 1) % n];
        for (std::size_t j = i + 1; j < n; ++j) {
            // Neighbouring edges share a vertex by construction.
            if (j == i + 1 || (i == 0 && j == n - 1)) continue;
            if (segments_intersect(a, b, ring[j], ring[(j + 1) % n])) return false;
        }
    }
    return true;
}

bool District::contains(const Vec2& p) const {
    for (const auto& r : rings) {
        if (point_in_polygon(p, r)) return true;
    }
    return false;
}

double District::area() const {
    double a = 0.0;
    for (const auto& r : rings) a += polygon_area(r);
    return a;
}

Bounds2 District::bounds() const {
    Bounds2 b{{INFINITY, INFINITY}, {-INFINITY, -INFINITY}};
    for (const auto& r : rings) {
        const auto rb = polygon_bounds(r);
        b.min.x = std::min(b.min.x, rb.min.x);
        b.min.y = std::min(b.min.y, rb.min.y);
        b.max.x = std::max(b.max.x, rb.max.x);
        b.max.y = std::max(b.max.y, rb.max.y);
    }
    return b;
}

void DistrictSet::validate() const {
    std::set<std::string> ids;
    for (const auto& d : districts) {
        if (!ids.insert(d.id).second) invalid_argument("duplicate district id '" + d.id + "'");
        if (d.rings.empty()) invalid_argument("district '" + d.id + "' has no polygon");
        for (const auto& r : d.rings) {
            if (r.size() < 3) invalid_argument("district '" + d.id + "' has a ring with fewer than 3 vertices");
            for (const auto& v : r) {
                if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
                    invalid_argument("district '" + d.id + "' has a non-finite vertex");
                }
            }
            if (!ring_is_simple(r)) invalid_argument("district '" + d.id + "' is self-intersecting");
        }
    }
}

DistrictEmbeddings district_average_embeddings(const FeatureStore& store, const DistrictSet& districts,
                                               std::size_t level) {
    if (level >= store.levels()) invalid_argument("level out of range");
    const std::size_t nd = districts.size();
    const std::size_t dim = store.dim();
    DistrictEmbeddings out;
    out.means.resize(nd);
    out.counts.assign(nd, 0);
    out.empty.assign(nd, 0);
    constexpr double kScale = 4294967296.0;
    parallel_for(nd, [&](std::size_t d) {
        const auto& district = districts.districts[d];
        const auto box = district.bounds();
        std::vector<__int128> sum(dim, 0);
        std::size_t count = 0;
        for (std::size_t p = 0; p < store.size(); ++p) {
            if (store.obs_count(level, p) == 0) continue;
            const Vec2 xy{store.points()[p].x, store.points()[p].y};
            if (xy.x < box.min.x || xy.x > box.max.x || xy.y < box.min.y || xy.y > box.max.y) continue;
            if (!district.contains(xy)) continue;
            const auto f = store.feature(level, p);
            for (std::size_t k = 0; k < dim; ++k) {
                sum[k] += static_cast<__int128>(std::llround(static_cast<double>(f[k]) * kScale));
            }
            ++count;
        }
        out.counts[d] = count;
        if (count == 0) {
            out.empty[d] = 1;
            return;
        }
        auto& mean = out.means[d];
        mean.resize(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            mean[k] = static_cast<float>(static_cast<double>(sum[k]) / kScale / static_cast<double>(count));
        }
    });
    return out;
}

CrimeDensity crime_density(std::span<const CrimeEvent> events, const DistrictSet& districts, double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) invalid_argument("sigma must be positive");
    for (const auto& e : events) {
        if (!(e.weight > 0.0) || !std::isfinite(e.weight)) invalid_argument("crime event weight must be positive");
        if (!std::isfinite(e.position.x) || !std::isfinite(e.position.y)) {
            invalid_argument("crime event position must be finite");
        }
    }
    for (const auto& d : districts.districts) {
        if (!(d.area() > 0.0)) invalid_argument("district '" + d.id + "' has zero area");
    }
    const double h = sigma / 5.0;
    const double reach = 12.0 * sigma;
    const std::size_t nd = districts.size();
    CrimeDensity out;
    out.per_km2_year.assign(nd, 0.0);
    out.integral.assign(nd, 0.0);

    parallel_for(nd, [&](std::size_t d) {
        const auto& district = districts.districts[d];
        const auto box = district.bounds();
        const auto i0 = static_cast<std::int64_t>(std::floor(box.min.x / h));
        const auto i1 = static_cast<std::int64_t>(std::floor(box.max.x / h));
        const auto j0 = static_cast<std::int64_t>(std::floor(box.min.y / h));
        const auto j1 = static_cast<std::int64_t>(std::floor(box.max.y / h));
        const std::size_t nx = static_cast<std::size_t>(i1 - i0 + 1);
        const std::size_t ny = static_cast<std::size_t>(j1 - j0 + 1);
        auto cell_x = [&](std::size_t i) { return static_cast<double>(i0 + static_cast<std::int64_t>(i)) * h; };
        auto cell_y = [&](std::size_t j) { return static_cast<double>(j0 + static_cast<std::int64_t>(j)) * h; };

        const auto boundary = boundary_cells(district, h, i0, j0, nx, ny);
        std::vector<std::uint8_t> inside(nx * ny, 0);
        // Boundary cells: sub-cell membership and the sub-row extents it implies.
        struct Split {
            std::size_t i, j;
            std::vector<std::uint8_t> sub;  // kSubdivision^2, row-major
        };
        std::vector<Split> splits;
        for (std::size_t j = 0; j < ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                if (!boundary[j * nx + i]) {
                    inside[j * nx + i] = district.contains({cell_x(i) + 0.5 * h, cell_y(j) + 0.5 * h}) ? 1 : 0;
                    continue;
                }
                Split sp{i, j, std::vector<std::uint8_t>(kSubdivision * kSubdivision, 0)};
                const double hs = h / kSubdivision;
                for (std::size_t b = 0; b < kSubdivision; ++b) {
                    for (std::size_t a = 0; a < kSubdivision; ++a) {
                        const Vec2 mid{cell_x(i) + (static_cast<double>(a) + 0.5) * hs,
                                       cell_y(j) + (static_cast<double>(b) + 0.5) * hs};
                        sp.sub[b * kSubdivision + a] = district.contains(mid) ? 1 : 0;
                    }
                }
                splits.push_back(std::move(sp));
            }
        }

        std::vector<double> mx(nx), my(ny), sx(kSubdivision), sy(kSubdivision);
        double total = 0.0;
        for (const auto& e : events) {
            if (e.position.x < box.min.x - reach || e.position.x > box.max.x + reach ||
                e.position.y < box.min.y - reach || e.position.y > box.max.y + reach) {
                continue;
            }
            for (std::size_t i = 0; i < nx; ++i) mx[i] = interval_mass(cell_x(i), cell_x(i) + h, e.position.x, sigma);
            for (std::size_t j = 0; j < ny; ++j) my[j] = interval_mass(cell_y(j), cell_y(j) + h, e.position.y, sigma);
            double mass = 0.0;
            for (std::size_t j = 0; j < ny; ++j) {
                if (my[j] == 0.0) continue;
                double row = 0.0;
                for (std::size_t i = 0; i < nx; ++i) {
                    if (inside[j * nx + i]) row += mx[i];
                }
                mass += row * my[j];
            }
            const double hs = h / kSubdivision;
            for (const auto& sp : splits) {
                if (my[sp.j] == 0.0 || mx[sp.i] == 0.0) continue;
                for (std::size_t a = 0; a < kSubdivision; ++a) {
                    const double x = cell_x(sp.i) + static_cast<double>(a) * hs;
                    sx[a] = interval_mass(x, x + hs, e.position.x, sigma);
                    const double y = cell_y(sp.j) + static_cast<double>(a) * hs;
                    sy[a] = interval_mass(y, y + hs, e.position.y, sigma);
                }
                for (std::size_t b = 0; b < kSubdivision; ++b) {
                    double row = 0.0;
                    for (std::size_t a = 0; a < kSubdivision; ++a) {
                        if (sp.sub[b * kSubdivision + a]) row += sx[a];
                    }
                    mass += row * sy[b];
                }
            }
            total += e.weight * mass;
        }
        out.integral[d] = total;
        out.per_km2_year[d] = total / district.area() * 1e6;
    });
    return out;
}

}  // namespace urbanfield::analytics
