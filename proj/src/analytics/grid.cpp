#include "analytics/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace urbanfield::analytics {

bool GridRaster::locate(const Vec2& p, int& col, int& row) const {
    const double c = std::floor((p.x - origin.x) / cell_size);
    const double r = std::floor((p.y - origin.y) / cell_size);
    if (c < 0 || r < 0 || c >= width || r >= height) return false;
    col = static_cast<int>(c);
    row = static_cast<int>(r);
    return true;
}

std::size_t GridRaster::observed_count() const {
    return static_cast<std::size_t>(std::count(observed.begin(), observed.end(), std::uint8_t{1}));
}

GridRaster project_values_to_grid(std::span<const Vec2> positions, std::span<const double> values,
                                  double cell_size) {
    if (!(cell_size > 0.0)) invalid_argument("cell size must be positive");
    if (positions.size() != values.size()) invalid_argument("positions and values differ in length");
    if (positions.empty()) invalid_argument("no observed points to project");
    Vec2 lo = positions[0], hi = positions[0];
    for (const auto& p : positions) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    GridRaster g;
    g.cell_size = cell_size;
    g.origin = {std::floor(lo.x / cell_size) * cell_size, std::floor(lo.y / cell_size) * cell_size};
    g.width = static_cast<int>(std::floor((hi.x - g.origin.x) / cell_size)) + 1;
    g.height = static_cast<int>(std::floor((hi.y - g.origin.y) / cell_size)) + 1;
    std::vector<double> sum(g.cell_count(), 0.0);
    std::vector<std::size_t> count(g.cell_count(), 0);
    for (std::size_t i = 0; i < positions.size(); ++i) {
        int c = 0, r = 0;
        if (!g.locate(positions[i], c, r)) continue;  // unreachable by construction
        sum[g.index(c, r)] += values[i];
        ++count[g.index(c, r)];
    }
    g.values.assign(g.cell_count(), std::numeric_limits<double>::quiet_NaN());
    g.observed.assign(g.cell_count(), 0);
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
        if (count[i] == 0) continue;
        g.values[i] = sum[i] / static_cast<double>(count[i]);
        g.observed[i] = 1;
    }
    return g;
}

GridRaster project_scores_to_grid(const PointCloud& points, const ScoreField& field, double cell_size) {
    if (field.size() != points.size()) invalid_argument("score field does not match the point cloud");
    std::vector<Vec2> pos;
    std::vector<double> vals;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!field.is_observed(i)) continue;
        pos.push_back({points[i].x, points[i].y});
        vals.push_back(field.values[i]);
    }
    return project_values_to_grid(pos, vals, cell_size);
}

namespace {

using i128 = __int128;

std::int64_t orient(const LatticePoint& a, const LatticePoint& b, const LatticePoint& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// > 0 when d lies strictly inside the circumcircle of counter-clockwise (a, b, c).
bool in_circle(const LatticePoint& a, const LatticePoint& b, const LatticePoint& c,
               const LatticePoint& d) {
    const i128 adx = a.x - d.x, ady = a.y - d.y;
    const i128 bdx = b.x - d.x, bdy = b.y - d.y;
    const i128 cdx = c.x - d.x, cdy = c.y - d.y;
    const i128 ad = adx * adx + ady * ady;
    const i128 bd = bdx * bdx + bdy * bdy;
    const i128 cd = cdx * cdx + cdy * cdy;
    const i128 det = adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
    return det > 0;
}

using Edge = std::pair<int, int>;
Edge edge_key(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

}  // namespace

std::vector<std::array<int, 3>> triangulate(std::span<const LatticePoint> pts) {
    std::vector<int> order(pts.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return pts[a].x != pts[b].x ? pts[a].x < pts[b].x : pts[a].y < pts[b].y;
    });
    order.erase(std::unique(order.begin(), order.end(),
                            [&](int a, int b) { return pts[a].x == pts[b].x && pts[a].y == pts[b].y; }),
                order.end());
    std::vector<std::array<int, 3>> tris;
    if (order.size() < 3) return tris;

    // Seed with the leading collinear run plus the first point off its line.
    std::size_t k = 2;
    while (k < order.size() && orient(pts[order[0]], pts[order[1]], pts[order[k]]) == 0) ++k;
    if (k == order.size()) return tris;
    const int apex = order[k];
    for (std::size_t i = 0; i + 1 < k; ++i) {
        std::array<int, 3> t{order[i], order[i + 1], apex};
        if (orient(pts[t[0]], pts[t[1]], pts[t[2]]) < 0) std::swap(t[0], t[1]);
        tris.push_back(t);
    }
    std::vector<int> hull;  // counter-clockwise
    if (orient(pts[order[0]], pts[order[k - 1]], pts[apex]) > 0) {
        for (std::size_t i = 0; i < k; ++i) hull.push_back(order[i]);
        hull.push_back(apex);
    } else {
        hull.push_back(order[0]);
        hull.push_back(apex);
        for (std::size_t i = k - 1; i >= 1; --i) hull.push_back(order[i]);
    }

    // Sweep: each new point lies outside the current hull; connect it to the
    // hull edges that face it.
    for (std::size_t s = k + 1; s < order.size(); ++s) {
        const int p = order[s];
        const std::size_t h = hull.size();
        std::vector<char> visible(h);
        bool any = false;
        for (std::size_t i = 0; i < h; ++i) {
            visible[i] = orient(pts[hull[i]], pts[hull[(i + 1) % h]], pts[p]) < 0;
            any = any || visible[i];
        }
        if (!any) continue;  // cannot happen for lexicographically sorted input
        std::size_t start = 0;
        while (!(visible[start] && !visible[(start + h - 1) % h])) ++start;
        std::size_t count = 0;
        while (visible[(start + count) % h]) ++count;
        for (std::size_t c = 0; c < count; ++c) {
            const int u = hull[(start + c) % h];
            const int v = hull[(start + c + 1) % h];
            tris.push_back({u, p, v});
        }
        std::vector<int> next;
        next.reserve(h + 1);
        const std::size_t end = (start + count) % h;  // first vertex kept after p
        for (std::size_t i = end;; i = (i + 1) % h) {
            next.push_back(hull[i]);
            if (i == start) break;
        }
        next.push_back(p);
        hull = std::move(next);
    }

    // Lawson flips to the Delaunay triangulation.
    std::map<Edge, std::array<int, 2>> edges;
    const auto link = [&](int t) {
        for (int e = 0; e < 3; ++e) {
            auto& slot = edges.try_emplace(edge_key(tris[t][e], tris[t][(e + 1) % 3]), std::array<int, 2>{-1, -1})
                             .first->second;
            (slot[0] < 0 ? slot[0] : slot[1]) = t;
        }
    };
    const auto unlink = [&](int t) {
        for (int e = 0; e < 3; ++e) {
            auto it = edges.find(edge_key(tris[t][e], tris[t][(e + 1) % 3]));
            auto& slot = it->second;
            if (slot[0] == t) {
                slot[0] = slot[1];
            }
            slot[1] = -1;
            if (slot[0] < 0) edges.erase(it);
        }
    };
    for (int t = 0; t < static_cast<int>(tris.size()); ++t) link(t);
    std::vector<Edge> stack;
    for (const auto& [e, _] : edges) stack.push_back(e);
    while (!stack.empty()) {
        const Edge e = stack.back();
        stack.pop_back();
        const auto it = edges.find(e);
        if (it == edges.end() || it->second[1] < 0) continue;
        const int t1 = it->second[0], t2 = it->second[1];
        // Rotate t1 so that it reads (a, b, c) with edge a->b; t2 then holds b->a.
        auto r1 = tris[t1];
        while (edge_key(r1[0], r1[1]) != e) std::rotate(r1.begin(), r1.begin() + 1, r1.end());
        const int a = r1[0], b = r1[1], c = r1[2];
        int d = -1;
        for (int v : tris[t2]) {
            if (v != a && v != b) d = v;
        }
        if (!in_circle(pts[a], pts[b], pts[c], pts[d])) continue;
        unlink(t1);
        unlink(t2);
        tris[t1] = {a, d, c};
        tris[t2] = {d, b, c};
        link(t1);
        link(t2);
        stack.push_back(edge_key(a, d));
        stack.push_back(edge_key(d, b));
        stack.push_back(edge_key(b, c));
        stack.push_back(edge_key(c, a));
    }
    return tris;
}

namespace {

// Nearest observed cell by Euclidean distance between centers; ties go to the
// lowest row-major index.
std::size_t nearest_observed(const GridRaster& g, int col, int row) {
    std::int64_t best_d2 = std::numeric_limits<std::int64_t>::max();
    std::size_t best = 0;
    const int max_r = std::max(g.width, g.height);
    for (int r = 0; r <= max_r; ++r) {
        for (int dy = -r; dy <= r; ++dy) {
            const int y = row + dy;
            if (y < 0 || y >= g.height) continue;
            const int step = (dy == -r || dy == r) ? 1 : 2 * r;
            for (int dx = -r; dx <= r; dx += std::max(step, 1)) {
                const int x = col + dx;
                if (x < 0 || x >= g.width) continue;
                const auto idx = g.index(x, y);
                if (!g.observed[idx]) continue;
                const std::int64_t d2 = static_cast<std::int64_t>(dx) * dx + static_cast<std::int64_t>(dy) * dy;
                if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
                    best_d2 = d2;
                    best = idx;
                }
            }
        }
        if (best_d2 != std::numeric_limits<std::int64_t>::max() &&
            static_cast<std::int64_t>(r + 1) * (r + 1) > best_d2) {
            break;
        }
    }
    return best;
}

}  // namespace

GridRaster interpolate_grid(const GridRaster& raster) {
    GridRaster g = raster;
    std::vector<LatticePoint> pts;
    std::vector<std::size_t> cell_of;
    for (int r = 0; r < g.height; ++r) {
        for (int c = 0; c < g.width; ++c) {
            if (!g.observed[g.index(c, r)]) continue;
            pts.push_back({c, r});
            cell_of.push_back(g.index(c, r));
        }
    }
    if (pts.empty()) invalid_argument("raster has no observed cells");
    std::vector<std::uint8_t> filled = g.observed;

    const auto tris = triangulate(pts);
    if (tris.empty()) {
        // Degenerate: a single cell or a line of cells.
        g.fallback_fill = true;
        const auto& a = pts.front();
        LatticePoint dir{0, 0};
        for (const auto& p : pts) {
            if (p.x != a.x || p.y != a.y) {
                dir = {p.x - a.x, p.y - a.y};
                break;
            }
        }
        std::vector<std::pair<double, double>> line;  // (t, value) sorted by t
        const double len2 = static_cast<double>(dir.x * dir.x + dir.y * dir.y);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double t = len2 > 0 ? ((pts[i].x - a.x) * dir.x + (pts[i].y - a.y) * dir.y) / len2 : 0.0;
            line.emplace_back(t, g.values[cell_of[i]]);
        }
        std::sort(line.begin(), line.end());
        for (int r = 0; r < g.height; ++r) {
            for (int c = 0; c < g.width; ++c) {
                const auto idx = g.index(c, r);
                if (filled[idx]) continue;
                const double t = len2 > 0 ? ((c - a.x) * dir.x + (r - a.y) * dir.y) / len2 : 0.0;
                double v;
                if (t <= line.front().first) {
                    v = line.front().second;
                } else if (t >= line.back().first) {
                    v = line.back().second;
                } else {
                    auto hi = std::upper_bound(line.begin(), line.end(), std::make_pair(t, -std::numeric_limits<double>::infinity()));
                    auto lo = hi - 1;
                    const double w = (t - lo->first) / (hi->first - lo->first);
                    v = lo->second + w * (hi->second - lo->second);
                }
                g.values[idx] = v;
            }
        }
        return g;
    }

    for (const auto& t : tris) {
        const auto &a = pts[t[0]], &b = pts[t[1]], &c = pts[t[2]];
        const double area = static_cast<double>(orient(a, b, c));
        const auto x0 = std::min({a.x, b.x, c.x}), x1 = std::max({a.x, b.x, c.x});
        const auto y0 = std::min({a.y, b.y, c.y}), y1 = std::max({a.y, b.y, c.y});
        const double va = g.values[cell_of[t[0]]], vb = g.values[cell_of[t[1]]], vc = g.values[cell_of[t[2]]];
        for (auto y = y0; y <= y1; ++y) {
            for (auto x = x0; x <= x1; ++x) {
                const auto idx = g.index(static_cast<int>(x), static_cast<int>(y));
                if (filled[idx]) continue;
                const LatticePoint p{x, y};
                const auto wa = orient(b, c, p), wb = orient(c, a, p), wc = orient(a, b, p);
                if (wa < 0 || wb < 0 || wc < 0) continue;
                g.values[idx] = (wa * va + wb * vb + wc * vc) / area;
                filled[idx] = 1;
            }
        }
    }
    for (int r = 0; r < g.height; ++r) {
        for (int c = 0; c < g.width; ++c) {
            const auto idx = g.index(c, r);
            if (!filled[idx]) g.values[idx] = g.values[nearest_observed(g, c, r)];
        }
    }
    return g;
}

}  // namespace urbanfield::analytics
