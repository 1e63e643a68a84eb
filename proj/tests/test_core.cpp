#include <doctest.h>

#include <cstring>
#include <fstream>
#include <numbers>

#include "core/bytes.hpp"
#include "core/geo.hpp"
#include "core/image.hpp"
#include "core/rng.hpp"
#include "core/sampling.hpp"
#include "core/store_io.hpp"
#include "test_support.hpp"

using namespace urbanfield;
using testing::TempDir;

TEST_CASE("geo: origin maps to the local origin") {
    const auto gt = GeoTransform::about(47.37, 8.54);
    const auto p = geo_to_local(47.37, 8.54, gt);
    CHECK(p.x == 0.0);
    CHECK(p.y == 0.0);
}

TEST_CASE("geo: one degree of latitude on the spherical earth") {
    const auto gt = GeoTransform::about(47.37, 8.54);
    const double expected = 2.0 * std::numbers::pi * 6371000.0 / 360.0;  // 111194.9266...
    CHECK(geo_to_local(48.37, 8.54, gt).y == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(111194.92664455874).epsilon(1e-15));
    CHECK(geo_to_local(47.37, 9.54, gt).x ==
          doctest::Approx(expected * std::cos(47.37 * std::numbers::pi / 180.0)).epsilon(1e-12));
}

TEST_CASE("geo: round trip within 1e-9 degrees over the scene") {
    const auto gt = GeoTransform::for_bounds(47.36, 47.39, 8.52, 8.56);
    SeededRng rng(1, "geo");
    for (int i = 0; i < 1000; ++i) {
        const double lat = rng.uniform(47.36, 47.39), lon = rng.uniform(8.52, 8.56);
        const auto back = local_to_geo(geo_to_local(lat, lon, gt), gt);
        REQUIRE(std::abs(back.lat - lat) < 1e-9);
        REQUIRE(std::abs(back.lon - lon) < 1e-9);
    }
}

TEST_CASE("geo: invalid scale is rejected") {
    GeoTransform gt;
    CHECK_THROWS_AS(gt.validate(), Error);
}

TEST_CASE("rng: identical seed and label give identical streams") {
    SeededRng a(42, "x"), b(42, "x"), c(42, "y"), d(43, "x");
    bool differs_label = false, differs_seed = false;
    for (int i = 0; i < 100; ++i) {
        const auto va = a.next_u64();
        REQUIRE(va == b.next_u64());
        differs_label |= va != c.next_u64();
        differs_seed |= va != d.next_u64();
    }
    CHECK(differs_label);
    CHECK(differs_seed);
}

TEST_CASE("rng: deriving a child does not perturb the parent") {
    SeededRng a(5, "parent"), b(5, "parent");
    (void)a.derive("child").next_u64();
    for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(a.derive("k").next_u64() == b.derive("k").next_u64());
}

TEST_CASE("rng: uniform and normal moments") {
    SeededRng rng(9, "moments");
    double s = 0, s2 = 0, n1 = 0, n2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        s += u;
        s2 += u * u;
        const double z = rng.normal();
        n1 += z;
        n2 += z * z;
    }
    CHECK(s / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(s2 / n - (s / n) * (s / n) == doctest::Approx(1.0 / 12).epsilon(0.02));
    CHECK(std::abs(n1 / n) < 0.01);
    CHECK(n2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("rng: uniform_index covers the range without bias") {
    SeededRng rng(3, "index");
    std::vector<int> hist(7);
    for (int i = 0; i < 70000; ++i) ++hist[rng.uniform_index(7)];
    for (int h : hist) CHECK(std::abs(h - 10000) < 400);
    CHECK_THROWS_AS(rng.uniform_index(0), Error);
}

TEST_CASE("downsample: identity when the cloud is small") {
    std::vector<Vec3f> pos(10);
    for (int i = 0; i < 10; ++i) pos[i] = {float(i), 0, 0};
    const PointCloud cloud(pos);
    SeededRng rng(1, "ds");
    const auto d = downsample_points(cloud, 20, rng);
    CHECK(d.cloud == cloud);
    for (std::size_t i = 0; i < 10; ++i) CHECK(d.source_index[i] == i);
    CHECK_THROWS_AS(downsample_points(cloud, 0, rng), Error);
}

TEST_CASE("downsample: deterministic, ordered, exact size") {
    std::vector<Vec3f> pos(1000);
    for (int i = 0; i < 1000; ++i) pos[i] = {float(i), 0, 0};
    const PointCloud cloud(pos);
    SeededRng r1(77, "ds"), r2(77, "ds");
    const auto a = downsample_points(cloud, 100, r1);
    const auto b = downsample_points(cloud, 100, r2);
    CHECK(a.source_index == b.source_index);
    REQUIRE(a.source_index.size() == 100);
    for (std::size_t i = 1; i < 100; ++i) CHECK(a.source_index[i - 1] < a.source_index[i]);
    for (std::size_t i = 0; i < 100; ++i) CHECK(a.cloud[i].x == float(a.source_index[i]));
}

TEST_CASE("downsample: selection frequency is uniform") {
    // 100 seeds, n = 1e5, target = 1e4. A single index has a binomial
    // frequency with standard deviation 0.03 over 100 seeds, so uniformity is
    // checked on blocks of 1000 consecutive indices (sd ~ 0.001).
    const std::size_t n = 100000, target = 10000, block = 1000;
    std::vector<int> counts(n);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        SeededRng rng(seed, "uniformity");
        for (auto i : sample_indices(n, target, rng)) ++counts[i];
    }
    double max_dev = 0;
    for (std::size_t b = 0; b < n / block; ++b) {
        double c = 0;
        for (std::size_t i = b * block; i < (b + 1) * block; ++i) c += counts[i];
        max_dev = std::max(max_dev, std::abs(c / (100.0 * block) - 0.1));
    }
    CHECK(max_dev < 0.01);
    // Per-index frequencies stay within a generous binomial bound.
    int far = 0;
    for (int c : counts) far += std::abs(c / 100.0 - 0.1) > 0.15;
    CHECK(far == 0);
}

namespace {

bool bit_equal(const FeatureStore& a, const FeatureStore& b) {
    if (a.size() != b.size() || a.levels() != b.levels() || a.dim() != b.dim()) return false;
    if (!(a.points() == b.points())) return false;
    for (std::size_t l = 0; l < a.levels(); ++l) {
        const auto fa = a.level_features(l), fb = b.level_features(l);
        if (std::memcmp(fa.data(), fb.data(), fa.size_bytes()) != 0) return false;
        const auto ca = a.level_counts(l), cb = b.level_counts(l);
        if (!std::equal(ca.begin(), ca.end(), cb.begin())) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("store io: 3 points, 2 levels, d = 4 round trip") {
    TempDir dir;
    FeatureStore s(PointCloud({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}}), 2, 4);
    const float f[4] = {0.5f, -0.25f, 0.125f, 1e-7f};
    for (int i = 0; i < 4; ++i) s.feature(1, 2)[i] = f[i];
    s.set_obs_count(1, 2, 3);
    write_feature_store(s, dir / "s.oc3d");
    const auto r = read_feature_store(dir / "s.oc3d");
    CHECK(bit_equal(s, r));
    CHECK(r.obs_count(0, 0) == 0);
    for (float x : r.feature(0, 1)) CHECK(x == 0.0f);
}

TEST_CASE("store io: header layout") {
    TempDir dir;
    FeatureStore s(PointCloud({{1, 2, 3}}), 3, 5);
    write_feature_store(s, dir / "s.oc3d");
    std::ifstream in(dir / "s.oc3d", std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
    REQUIRE(bytes.size() == 24 + 12 + 3 * (4 + 20));
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "OC3D");
    CHECK(bytes[4] == 1);           // version u32
    CHECK(bytes[8] == 1);           // n u64
    CHECK(bytes[16] == 3);          // L u8
    CHECK(bytes[17] == 5);          // d u16
    CHECK(bytes[18] == 0);
}

TEST_CASE("store io: randomized round trips are bit-exact") {
    TempDir dir;
    SeededRng rng(11, "store-prop");
    for (int trial = 0; trial < 25; ++trial) {
        const auto n = 1 + rng.uniform_index(200);
        const auto levels = 1 + rng.uniform_index(4);
        const auto d = 1 + rng.uniform_index(40);
        const auto s = testing::random_store(rng, n, levels, d);
        s.validate();
        const auto path = dir / ("s" + std::to_string(trial) + ".oc3d");
        write_feature_store(s, path);
        REQUIRE(bit_equal(s, read_feature_store(path)));
    }
}

TEST_CASE("store io: corrupt files raise format errors naming the offset") {
    TempDir dir;
    FeatureStore s(PointCloud({{1, 2, 3}, {4, 5, 6}}), 1, 2);
    write_feature_store(s, dir / "ok.oc3d");
    std::ifstream in(dir / "ok.oc3d", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});

    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream out(dir / name, std::ios::binary);
        out << content;
        return dir / name;
    };
    auto expect_format = [](const std::filesystem::path& p, const std::string& needle) {
        try {
            (void)read_feature_store(p);
            FAIL("expected a format error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Format);
            INFO(std::string(e.what()));
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    auto magic = bytes;
    magic[0] = 'X';
    expect_format(write("magic.oc3d", magic), "offset 0");
    auto version = bytes;
    version[4] = 9;
    expect_format(write("version.oc3d", version), "offset 4");
    expect_format(write("trunc.oc3d", bytes.substr(0, bytes.size() - 3)), "offset");
    expect_format(write("extra.oc3d", bytes + "zz"), "offset");
}

TEST_CASE("store invariant: zero vector iff zero count") {
    FeatureStore s(PointCloud({{0, 0, 0}}), 1, 2);
    s.validate();
    s.feature(0, 0)[0] = 1.0f;
    CHECK_THROWS_AS(s.validate(), Error);
    s.set_obs_count(0, 0, 1);
    s.validate();
    s.feature(0, 0)[0] = 0.0f;
    CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("point cloud and mesh containers round trip") {
    TempDir dir;
    SeededRng rng(2, "mesh");
    TriangleMesh mesh;
    testing::add_box(mesh, {0, 0, 0}, {1, 2, 3}, {0.1f, 0.2f, 0.3f});
    testing::add_ground(mesh, -5, -5, 5, 5);
    write_mesh(mesh, dir / "m.oc3m");
    CHECK(read_mesh(dir / "m.oc3m") == mesh);

    TriangleMesh bare = mesh;
    bare.vertex_colors.clear();
    write_mesh(bare, dir / "b.oc3m");
    CHECK(read_mesh(dir / "b.oc3m") == bare);

    std::vector<Vec3f> pos(57);
    for (auto& p : pos) p = {float(rng.uniform()), float(rng.uniform()), float(rng.uniform())};
    write_point_cloud(PointCloud(pos), dir / "p.oc3p");
    CHECK(read_point_cloud(dir / "p.oc3p") == PointCloud(pos));
    CHECK_THROWS_AS(read_mesh(dir / "p.oc3p"), Error);
}

TEST_CASE("mesh validation rejects bad indices and misaligned colors") {
    TriangleMesh m;
    testing::add_ground(m, 0, 0, 1, 1);
    m.validate();
    m.triangles.push_back({0, 1, 9});
    CHECK_THROWS_AS(m.validate(), Error);
    m.triangles.pop_back();
    m.vertex_colors.pop_back();
    CHECK_THROWS_AS(m.validate(), Error);
}

TEST_CASE("images: PNG and raw containers round trip") {
    TempDir dir;
    RgbImage img(13, 7);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i * 37);
    write_image(img, dir / "a.png");
    write_image(img, dir / "a.oc3c");
    CHECK(read_image(dir / "a.png") == img);
    CHECK(read_image(dir / "a.oc3c") == img);
    CHECK_THROWS_AS(read_image(dir / "missing.png"), Error);
}
