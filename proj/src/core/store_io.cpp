#include "core/store_io.hpp"

#include "core/bytes.hpp"

namespace urbanfield {
namespace {

void put_positions(ByteWriter& w, const std::vector<Vec3f>& pts) {
    for (const auto& p : pts) {
        w.put(p.x);
        w.put(p.y);
        w.put(p.z);
    }
}

std::vector<Vec3f> get_positions(ByteReader& r, std::uint64_t n) {
    if (n > r.remaining() / 12) r.error("point count " + std::to_string(n) + " exceeds file size");
    std::vector<Vec3f> pts(n);
    for (auto& p : pts) {
        p.x = r.get<float>();
        p.y = r.get<float>();
        p.z = r.get<float>();
        if (!p.to_double().finite()) r.error("non-finite position");
    }
    return pts;
}

}  // namespace

void write_feature_store(const FeatureStore& store, const std::filesystem::path& path) {
    store.validate();
    ByteWriter w;
    w.magic("OC3D");
    w.put(kContainerVersion);
    w.put(static_cast<std::uint64_t>(store.size()));
    w.put(static_cast<std::uint8_t>(store.levels()));
    w.put(static_cast<std::uint16_t>(store.dim()));
    w.zeros(5);
    put_positions(w, store.points().positions());
    for (std::size_t l = 0; l < store.levels(); ++l) {
        w.put_span(store.level_counts(l));
        w.put_span(store.level_features(l));
    }
    w.save(path);
}

FeatureStore read_feature_store(const std::filesystem::path& path) {
    auto r = ByteReader::load(path);
    r.expect_magic("OC3D");
    r.expect_version(kContainerVersion);
    const auto n = r.get<std::uint64_t>();
    const auto levels = r.get<std::uint8_t>();
    const auto dim = r.get<std::uint16_t>();
    r.skip(5);
    if (levels == 0) r.error("level count is zero");
    if (dim == 0) r.error("dimension is zero");
    auto pts = get_positions(r, n);
    const std::uint64_t per_level = n * 4ull + n * dim * 4ull;
    if (r.remaining() != per_level * levels) {
        r.error("expected " + std::to_string(per_level * levels) + " payload bytes, found " +
                std::to_string(r.remaining()));
    }
    FeatureStore store(PointCloud(std::move(pts)), levels, dim);
    for (std::size_t l = 0; l < levels; ++l) {
        r.get_span(store.level_counts(l), "observation counts");
        r.get_span(store.level_features(l), "features");
    }
    r.expect_end();
    try {
        store.validate();
    } catch (const Error& e) {
        fail(ErrorCode::Format, path.string() + ": " + e.what());
    }
    return store;
}

void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
    ByteWriter w;
    w.magic("OC3P");
    w.put(kContainerVersion);
    w.put(static_cast<std::uint64_t>(cloud.size()));
    w.zeros(8);
    put_positions(w, cloud.positions());
    w.save(path);
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
    auto r = ByteReader::load(path);
    r.expect_magic("OC3P");
    r.expect_version(kContainerVersion);
    const auto n = r.get<std::uint64_t>();
    r.skip(8);
    auto pts = get_positions(r, n);
    r.expect_end();
    return PointCloud(std::move(pts));
}

void write_mesh(const TriangleMesh& mesh, const std::filesystem::path& path) {
    mesh.validate();
    ByteWriter w;
    w.magic("OC3M");
    w.put(kContainerVersion);
    w.put(static_cast<std::uint64_t>(mesh.vertices.size()));
    w.put(static_cast<std::uint64_t>(mesh.triangles.size()));
    w.put(static_cast<std::uint8_t>(mesh.has_colors() ? 1 : 0));
    w.zeros(7);
    put_positions(w, mesh.vertices);
    for (const auto& t : mesh.triangles) {
        w.put(t.a);
        w.put(t.b);
        w.put(t.c);
    }
    for (const auto& c : mesh.vertex_colors) {
        w.put(c.r);
        w.put(c.g);
        w.put(c.b);
    }
    w.save(path);
}

TriangleMesh read_mesh(const std::filesystem::path& path) {
    auto r = ByteReader::load(path);
    r.expect_magic("OC3M");
    r.expect_version(kContainerVersion);
    const auto nv = r.get<std::uint64_t>();
    const auto nt = r.get<std::uint64_t>();
    const auto flags = r.get<std::uint8_t>();
    r.skip(7);
    TriangleMesh mesh;
    mesh.vertices = get_positions(r, nv);
    if (nt > r.remaining() / 12) r.error("triangle count exceeds file size");
    mesh.triangles.resize(nt);
    for (auto& t : mesh.triangles) {
        t.a = r.get<std::uint32_t>();
        t.b = r.get<std::uint32_t>();
        t.c = r.get<std::uint32_t>();
    }
    if (flags & 1u) {
        mesh.vertex_colors.resize(nv);
        for (auto& c : mesh.vertex_colors) {
            c.r = r.get<float>();
            c.g = r.get<float>();
            c.b = r.get<float>();
        }
    }
    r.expect_end();
    try {
        mesh.validate();
    } catch (const Error& e) {
        fail(ErrorCode::Format, path.string() + ": " + e.what());
    }
    return mesh;
}

}  // namespace urbanfield
