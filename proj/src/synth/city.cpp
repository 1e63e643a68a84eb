#include "synth/city.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "core/bytes.hpp"
#include "core/errors.hpp"

namespace urbanfield::synth {

namespace {

constexpr int kFree = -1;
constexpr int kRoad = -2;
constexpr int kTree = -3;
constexpr double kInset = 0.5;

class MeshBuilder {
public:
    MeshBuilder(TriangleMesh& mesh, std::vector<TriangleLabel>& labels) : mesh_(mesh), labels_(labels) {}

    // Planar quad a-b-c-d with one flat color.
    void quad(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, const Rgb& color,
              const TriangleLabel& label) {
        const auto base = static_cast<std::uint32_t>(mesh_.vertices.size());
        for (const auto* v : {&a, &b, &c, &d}) {
            mesh_.vertices.push_back(Vec3f::from(*v));
            mesh_.vertex_colors.push_back(color);
        }
        mesh_.triangles.push_back({base, base + 1, base + 2});
        mesh_.triangles.push_back({base, base + 2, base + 3});
        labels_.push_back(label);
        labels_.push_back(label);
    }

    // Roof (part 0) and four walls (parts 1-4); no floor.
    void box(double x0, double y0, double x1, double y1, double h, const Rgb& roof, const Rgb& wall,
             TriangleLabel label) {
        label.part = 0;
        quad({x0, y0, h}, {x1, y0, h}, {x1, y1, h}, {x0, y1, h}, roof, label);
        const std::array<std::array<double, 4>, 4> walls = {{{x0, y0, x1, y0},
                                                             {x1, y0, x1, y1},
                                                             {x1, y1, x0, y1},
                                                             {x0, y1, x0, y0}}};
        for (int i = 0; i < 4; ++i) {
            const auto& w = walls[static_cast<std::size_t>(i)];
            label.part = i + 1;
            quad({w[0], w[1], 0.0}, {w[2], w[3], 0.0}, {w[2], w[3], h}, {w[0], w[1], h}, wall, label);
        }
    }

private:
    TriangleMesh& mesh_;
    std::vector<TriangleLabel>& labels_;
};

Rgb rgb255(double r, double g, double b) {
    return {static_cast<float>(r / 255.0), static_cast<float>(g / 255.0), static_cast<float>(b / 255.0)};
}

Rgb shade(const Rgb& c, float f) { return {c.r * f, c.g * f, c.b * f}; }

}  // namespace

SyntheticCity generate_city(const CityParams& p, SeededRng& rng) {
    if (!(p.cell > 0.0) || !(p.size >= p.cell) || !(p.block >= p.cell) || p.road_width < 0.0 ||
        p.min_building_cells < 1 || p.max_building_cells < p.min_building_cells ||
        !(p.min_building_height > 0.0) || p.max_building_height < p.min_building_height || p.apron < 0.0) {
        invalid_argument("invalid synthetic city parameters");
    }
    SyntheticCity city;
    city.params = p;
    city.bounds = {{0.0, 0.0}, {p.size, p.size}};
    const int n = static_cast<int>(std::lround(p.size / p.cell));
    const int block_cells = static_cast<int>(std::lround(p.block / p.cell));
    const int road_cells = static_cast<int>(std::lround(p.road_width / p.cell));
    const int blocks = (n + block_cells - 1) / block_cells;
    std::vector<int> occ(static_cast<std::size_t>(n) * n, kFree);
    auto at = [&](int x, int y) -> int& { return occ[static_cast<std::size_t>(y) * n + x]; };
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            if (x % block_cells < road_cells || y % block_cells < road_cells) at(x, y) = kRoad;
        }
    }

    MeshBuilder mb(city.mesh, city.labels);
    auto place_rng = rng.derive("buildings");
    struct Lot {
        int x, y, w, h;
    };
    std::vector<Lot> lots;
    for (int by = 0; by < blocks; ++by) {
        for (int bx = 0; bx < blocks; ++bx) {
            const int ox = bx * block_cells + road_cells, oy = by * block_cells + road_cells;
            const int span_x = std::min(n, (bx + 1) * block_cells) - ox;
            const int span_y = std::min(n, (by + 1) * block_cells) - oy;
            int placed = 0;
            for (int attempt = 0; attempt < 100 && placed < p.buildings_per_block; ++attempt) {
                const auto range = static_cast<std::uint64_t>(p.max_building_cells - p.min_building_cells + 1);
                const int w = p.min_building_cells + static_cast<int>(place_rng.uniform_index(range));
                const int h = p.min_building_cells + static_cast<int>(place_rng.uniform_index(range));
                if (w > span_x || h > span_y) continue;
                const int x = ox + static_cast<int>(place_rng.uniform_index(static_cast<std::uint64_t>(span_x - w + 1)));
                const int y = oy + static_cast<int>(place_rng.uniform_index(static_cast<std::uint64_t>(span_y - h + 1)));
                bool ok = true;
                for (int yy = y - 1; yy <= y + h && ok; ++yy) {
                    for (int xx = x - 1; xx <= x + w && ok; ++xx) {
                        if (xx < 0 || yy < 0 || xx >= n || yy >= n) continue;
                        const int o = at(xx, yy);
                        const bool inside = xx >= x && xx < x + w && yy >= y && yy < y + h;
                        if (o >= 0 || (inside && o != kFree)) ok = false;
                    }
                }
                if (!ok) continue;
                const int index = static_cast<int>(lots.size());
                for (int yy = y; yy < y + h; ++yy) {
                    for (int xx = x; xx < x + w; ++xx) at(xx, yy) = index;
                }
                lots.push_back({x, y, w, h});
                ++placed;
            }
        }
    }

    auto color_rng = rng.derive("colors");
    city.building_is_red.assign(lots.size(), 0);
    for (std::size_t i = 0; i < lots.size(); ++i) {
        const auto& lot = lots[i];
        const double x0 = lot.x * p.cell + kInset, y0 = lot.y * p.cell + kInset;
        const double x1 = (lot.x + lot.w) * p.cell - kInset, y1 = (lot.y + lot.h) * p.cell - kInset;
        const double height = color_rng.uniform(p.min_building_height, p.max_building_height);
        const bool red = color_rng.uniform() < p.red_building_fraction;
        city.building_is_red[i] = red ? 1 : 0;
        const Rgb roof = red ? rgb255(color_rng.uniform(200, 240), color_rng.uniform(30, 60), color_rng.uniform(30, 60))
                             : rgb255(color_rng.uniform(30, 70), color_rng.uniform(60, 110), color_rng.uniform(190, 240));
        TriangleLabel label{SurfaceClass::Building, static_cast<std::int32_t>(i), 0, true, false};
        mb.box(x0, y0, x1, y1, height, roof, shade(roof, 0.85f), label);
        analytics::District d;
        d.id = "b" + std::to_string(i);
        d.rings.push_back({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
        d.value = 1.0;
        city.footprints.districts.push_back(std::move(d));
    }

    auto tree_rng = rng.derive("trees");
    std::int32_t trees = 0;
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            if (at(x, y) != kFree) continue;
            // Keep a one-cell clearance around buildings so trees never share their cells.
            bool near_building = false;
            for (int yy = y - 1; yy <= y + 1; ++yy) {
                for (int xx = x - 1; xx <= x + 1; ++xx) {
                    if (xx >= 0 && yy >= 0 && xx < n && yy < n && at(xx, yy) >= 0) near_building = true;
                }
            }
            if (near_building || tree_rng.uniform() >= p.tree_probability) continue;
            at(x, y) = kTree;
            const double s = tree_rng.uniform(3.0, 6.0);
            const double cx = (x + 0.5) * p.cell + tree_rng.uniform(-1.0, 1.0) * 0.5 * (p.cell - s - 1.0);
            const double cy = (y + 0.5) * p.cell + tree_rng.uniform(-1.0, 1.0) * 0.5 * (p.cell - s - 1.0);
            const double h = tree_rng.uniform(5.0, 10.0);
            const Rgb leaf = rgb255(tree_rng.uniform(25, 55), tree_rng.uniform(110, 170), tree_rng.uniform(35, 65));
            mb.box(cx - s / 2, cy - s / 2, cx + s / 2, cy + s / 2, h, leaf, shade(leaf, 0.8f),
                   {SurfaceClass::Tree, trees++, 0, true, false});
        }
    }

    auto ground_rng = rng.derive("ground");
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const int o = at(x, y);
            const int bx = x / block_cells, by = y / block_cells;
            TriangleLabel label;
            Rgb color;
            if (o == kRoad) {
                const double g = ground_rng.uniform(128, 138);
                color = rgb255(g, g, g);
                label = {SurfaceClass::Road, 0, by * blocks + bx, true, false};
            } else {
                const double g = ground_rng.uniform(142, 158);
                color = rgb255(g, g, g);
                const int lx = (x % block_cells) / 3, ly = (y % block_cells) / 3;
                label = {SurfaceClass::Ground, by * blocks + bx, ly * 4 + lx, true, o >= 0};
            }
            const double x0 = x * p.cell, y0 = y * p.cell, x1 = x0 + p.cell, y1 = y0 + p.cell;
            mb.quad({x0, y0, 0.0}, {x1, y0, 0.0}, {x1, y1, 0.0}, {x0, y1, 0.0}, color, label);
        }
    }

    if (p.apron > 0.0) {
        const double a = p.apron, s = p.size;
        const Rgb gray = rgb255(150, 150, 150);
        const TriangleLabel label{SurfaceClass::Ground, -1, 0, false, false};
        mb.quad({-a, -a, 0}, {s + a, -a, 0}, {s + a, 0, 0}, {-a, 0, 0}, gray, label);
        mb.quad({-a, s, 0}, {s + a, s, 0}, {s + a, s + a, 0}, {-a, s + a, 0}, gray, label);
        mb.quad({-a, 0, 0}, {0, 0, 0}, {0, s, 0}, {-a, s, 0}, gray, label);
        mb.quad({s, 0, 0}, {s + a, 0, 0}, {s + a, s, 0}, {s, s, 0}, gray, label);
    }
    city.mesh.validate();
    return city;
}

PointCloud sample_surface_points(const SyntheticCity& city, std::size_t count, SeededRng& rng) {
    const auto& mesh = city.mesh;
    std::vector<std::size_t> tris;
    std::vector<double> cumulative;
    double total = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& label = city.labels[t];
        if (!label.in_city || label.hidden) continue;
        const auto& tri = mesh.triangles[t];
        const Vec3 a = mesh.vertices[tri.a].to_double();
        const Vec3 b = mesh.vertices[tri.b].to_double();
        const Vec3 c = mesh.vertices[tri.c].to_double();
        total += 0.5 * (b - a).cross(c - a).norm();
        tris.push_back(t);
        cumulative.push_back(total);
    }
    if (tris.empty() || !(total > 0.0)) invalid_argument("city has no sampleable surface");
    std::vector<Vec3f> points;
    points.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double u = rng.uniform() * total;
        auto k = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        k = std::min(k, tris.size() - 1);
        const auto& tri = mesh.triangles[tris[k]];
        const Vec3 a = mesh.vertices[tri.a].to_double();
        const Vec3 b = mesh.vertices[tri.b].to_double();
        const Vec3 c = mesh.vertices[tri.c].to_double();
        const double r1 = std::sqrt(rng.uniform()), r2 = rng.uniform();
        points.push_back(Vec3f::from(a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2)));
    }
    return PointCloud(std::move(points));
}

void write_labels(const std::vector<TriangleLabel>& labels, const std::filesystem::path& path) {
    ByteWriter w;
    w.magic("OC3L");
    w.put<std::uint32_t>(1);
    w.put<std::uint64_t>(labels.size());
    w.zeros(4);
    for (const auto& l : labels) {
        w.put<std::uint8_t>(static_cast<std::uint8_t>(l.cls));
        w.put<std::uint8_t>(static_cast<std::uint8_t>((l.in_city ? 1 : 0) | (l.hidden ? 2 : 0)));
        w.zeros(2);
        w.put<std::int32_t>(l.object);
        w.put<std::int32_t>(l.part);
    }
    w.save(path);
}

std::vector<TriangleLabel> read_labels(const std::filesystem::path& path) {
    auto r = ByteReader::load(path);
    r.expect_magic("OC3L");
    r.expect_version(1);
    const auto n = r.get<std::uint64_t>();
    r.skip(4);
    if (n > r.remaining() / 12) r.error("label count " + std::to_string(n) + " exceeds file size");
    std::vector<TriangleLabel> labels(n);
    for (auto& l : labels) {
        const auto cls = r.get<std::uint8_t>();
        if (cls > 3) r.error("unknown surface class " + std::to_string(cls));
        l.cls = static_cast<SurfaceClass>(cls);
        const auto flags = r.get<std::uint8_t>();
        l.in_city = (flags & 1) != 0;
        l.hidden = (flags & 2) != 0;
        r.skip(2);
        l.object = r.get<std::int32_t>();
        l.part = r.get<std::int32_t>();
    }
    r.expect_end();
    return labels;
}

std::vector<seg::SegmentRecord> synthetic_segments(const view::RenderedView& view,
                                                   const std::vector<TriangleLabel>& labels) {
    const auto& ids = view.triangle_id;
    const int w = view.intrinsics.width, h = view.intrinsics.height;
    if (ids.size() != static_cast<std::size_t>(w) * h) {
        invalid_argument("view " + std::to_string(view.id) + " was rendered without triangle ids");
    }
    std::vector<seg::SegmentRecord> out;
    for (int level = seg::kMinLevel; level <= seg::kMaxLevel; ++level) {
        std::map<std::tuple<int, int, int>, std::vector<std::uint32_t>> groups;
        for (std::size_t px = 0; px < ids.size(); ++px) {
            const auto t = ids[px];
            if (t < 0) continue;
            if (static_cast<std::size_t>(t) >= labels.size()) invalid_argument("triangle id without a label");
            const auto& l = labels[static_cast<std::size_t>(t)];
            const int cls = static_cast<int>(l.cls);
            std::tuple<int, int, int> key{cls, 0, 0};
            if (level >= 2) std::get<1>(key) = l.object;
            if (level == 3) std::get<2>(key) = l.part;
            groups[key].push_back(static_cast<std::uint32_t>(px));
        }
        int ordinal = 0;
        for (const auto& [key, pixels] : groups) {
            std::vector<seg::Run> runs;
            for (auto px : pixels) {
                if (!runs.empty() && runs.back().start + runs.back().length == px) {
                    ++runs.back().length;
                } else {
                    runs.push_back({px, 1});
                }
            }
            out.push_back(seg::make_segment(view.id, level, w, h, std::move(runs), ordinal++));
        }
    }
    return out;
}

}  // namespace urbanfield::synth
