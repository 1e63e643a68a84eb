#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "analytics/calibration.hpp"
#include "analytics/district.hpp"
#include "analytics/grid.hpp"
#include "analytics/ground_truth.hpp"
#include "analytics/knn.hpp"
#include "core/geo.hpp"
#include "core/rng.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace urbanfield;
using namespace urbanfield::analytics;

namespace {

District square(const std::string& id, double x0, double y0, double side) {
    District d;
    d.id = id;
    d.rings.push_back({{x0, y0}, {x0 + side, y0}, {x0 + side, y0 + side}, {x0, y0 + side}});
    return d;
}

}  // namespace

TEST_CASE("grid: projection means and extent") {
    std::vector<Vec2> pos{{1, 1}, {2, 3}, {9, 9}};
    std::vector<double> vals{1, 2, 3};
    auto g = project_values_to_grid(pos, vals, 10);
    CHECK(g.width == 1);
    CHECK(g.height == 1);
    CHECK(g.values[0] == 2.0);
    g = project_values_to_grid(std::vector<Vec2>{{-3, 14}}, std::vector<double>{5}, 10);
    CHECK(g.width == 1);
    CHECK(g.observed[0] == 1);
    CHECK(g.origin.x == -10.0);
    CHECK(g.origin.y == 10.0);
    CHECK_THROWS_AS(project_values_to_grid(std::vector<Vec2>{}, std::vector<double>{}, 10), Error);
    CHECK_THROWS_AS(project_values_to_grid(pos, vals, 0), Error);
}

TEST_CASE("grid: random scatter equals a binning loop") {
    SeededRng rng(14, "grid");
    for (int trial = 0; trial < 20; ++trial) {
        const double cell = rng.uniform(1, 20);
        std::vector<Vec2> pos(200);
        std::vector<double> vals(200);
        for (std::size_t i = 0; i < pos.size(); ++i) {
            pos[i] = {rng.uniform(-100, 300), rng.uniform(-50, 80)};
            vals[i] = rng.uniform(0, 1);
        }
        const auto g = project_values_to_grid(pos, vals, cell);
        std::vector<double> sum(g.cell_count(), 0);
        std::vector<int> count(g.cell_count(), 0);
        for (std::size_t i = 0; i < pos.size(); ++i) {
            const int c = static_cast<int>(std::floor((pos[i].x - g.origin.x) / cell));
            const int r = static_cast<int>(std::floor((pos[i].y - g.origin.y) / cell));
            REQUIRE(c >= 0);
            REQUIRE(c < g.width);
            REQUIRE(r >= 0);
            REQUIRE(r < g.height);
            sum[g.index(c, r)] += vals[i];
            ++count[g.index(c, r)];
        }
        for (std::size_t k = 0; k < g.cell_count(); ++k) {
            REQUIRE(bool(g.observed[k]) == (count[k] > 0));
            if (count[k] > 0) REQUIRE(g.values[k] == doctest::Approx(sum[k] / count[k]).epsilon(1e-12));
        }
    }
}

TEST_CASE("interpolation: constant field, observed cells and the 1-D fallback") {
    SeededRng rng(15, "interp");
    std::vector<Vec2> pos;
    std::vector<double> vals;
    for (int i = 0; i < 60; ++i) {
        pos.push_back({rng.uniform(0, 200), rng.uniform(0, 150)});
        vals.push_back(0.37);
    }
    auto g = project_values_to_grid(pos, vals, 10);
    auto f = interpolate_grid(g);
    CHECK_FALSE(f.fallback_fill);
    for (double v : f.values) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));

    for (auto& v : vals) v = rng.uniform(0, 1);
    g = project_values_to_grid(pos, vals, 10);
    f = interpolate_grid(g);
    for (std::size_t k = 0; k < g.cell_count(); ++k) {
        REQUIRE(std::isfinite(f.values[k]));
        if (g.observed[k]) REQUIRE(f.values[k] == g.values[k]);
        REQUIRE(f.observed[k] == g.observed[k]);
    }

    // Cells 0 and 10 on a single row; the nine gaps are filled linearly.
    const auto line = interpolate_grid(project_values_to_grid(std::vector<Vec2>{{5, 5}, {105, 5}},
                                                              std::vector<double>{0, 10}, 10));
    CHECK(line.fallback_fill);
    REQUIRE(line.width == 11);
    for (int c = 0; c <= 10; ++c) CHECK(line.values[c] == doctest::Approx(c).epsilon(1e-12));
}

TEST_CASE("interpolation: linear fields are reproduced inside the hull") {
    SeededRng rng(16, "linear");
    std::vector<Vec2> pos;
    std::vector<double> vals;
    for (int i = 0; i < 80; ++i) {
        const double x = std::floor(rng.uniform(0, 30)) * 5 + 2.5, y = std::floor(rng.uniform(0, 30)) * 5 + 2.5;
        pos.push_back({x, y});
        vals.push_back(0.5 + 0.01 * x - 0.02 * y);
    }
    const auto g = project_values_to_grid(pos, vals, 5);
    const auto f = interpolate_grid(g);
    std::vector<LatticePoint> obs;
    for (int r = 0; r < g.height; ++r)
        for (int c = 0; c < g.width; ++c)
            if (g.observed[g.index(c, r)]) obs.push_back({c, r});
    const auto tris = triangulate(obs);
    CHECK(!tris.empty());
    std::size_t checked = 0;
    for (int r = 0; r < g.height; ++r) {
        for (int c = 0; c < g.width; ++c) {
            bool inside = false;
            for (const auto& t : tris) {
                const auto& a = obs[t[0]];
                const auto& b = obs[t[1]];
                const auto& d = obs[t[2]];
                auto orient = [](const LatticePoint& p, const LatticePoint& q, double x, double y) {
                    return (q.x - p.x) * (y - p.y) - (q.y - p.y) * (x - p.x);
                };
                if (orient(a, b, c, r) >= 0 && orient(b, d, c, r) >= 0 && orient(d, a, c, r) >= 0) inside = true;
            }
            if (!inside) continue;
            const auto center = g.cell_center(c, r);
            REQUIRE(f.values[g.index(c, r)] == doctest::Approx(0.5 + 0.01 * center.x - 0.02 * center.y).epsilon(1e-9));
            ++checked;
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("triangulation: covers the hull with counter-clockwise Delaunay triangles") {
    SeededRng rng(17, "tri");
    std::vector<LatticePoint> pts;
    for (int i = 0; i < 60; ++i) pts.push_back({static_cast<std::int64_t>(rng.uniform_index(50)),
                                                static_cast<std::int64_t>(rng.uniform_index(50))});
    std::sort(pts.begin(), pts.end(), [](auto a, auto b) { return std::tie(a.x, a.y) < std::tie(b.x, b.y); });
    pts.erase(std::unique(pts.begin(), pts.end(), [](auto a, auto b) { return a.x == b.x && a.y == b.y; }), pts.end());
    const auto tris = triangulate(pts);
    double area2 = 0;
    for (const auto& t : tris) {
        const auto& a = pts[t[0]];
        const auto& b = pts[t[1]];
        const auto& c = pts[t[2]];
        const double o = double(b.x - a.x) * (c.y - a.y) - double(b.y - a.y) * (c.x - a.x);
        REQUIRE(o > 0);
        area2 += o;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            if (k == std::size_t(t[0]) || k == std::size_t(t[1]) || k == std::size_t(t[2])) continue;
            const double ax = a.x - pts[k].x, ay = a.y - pts[k].y, bx = b.x - pts[k].x, by = b.y - pts[k].y,
                         cx = c.x - pts[k].x, cy = c.y - pts[k].y;
            const double det = (ax * ax + ay * ay) * (bx * cy - cx * by) - (bx * bx + by * by) * (ax * cy - cx * ay) +
                               (cx * cx + cy * cy) * (ax * by - bx * ay);
            REQUIRE(det <= 0);
        }
    }
    // Hull area by monotone chain.
    std::vector<LatticePoint> hull;
    for (int pass = 0; pass < 2; ++pass) {
        const std::size_t start = hull.size();
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto& p = pass == 0 ? pts[i] : pts[pts.size() - 1 - i];
            while (hull.size() >= start + 2) {
                const auto& a = hull[hull.size() - 2];
                const auto& b = hull.back();
                if ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) > 0) break;
                hull.pop_back();
            }
            hull.push_back(p);
        }
        hull.pop_back();
    }
    double hull2 = 0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const auto& a = hull[i];
        const auto& b = hull[(i + 1) % hull.size()];
        hull2 += double(a.x) * b.y - double(b.x) * a.y;
    }
    CHECK(area2 == doctest::Approx(hull2));
}

TEST_CASE("quantile type 7 and binning") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    CHECK(quantile_type7(x, 0.0) == 1.0);
    CHECK(quantile_type7(x, 0.5) == 3.0);
    CHECK(quantile_type7(x, 0.3) == doctest::Approx(2.2));
    CHECK(quantile_type7(x, 1.0) == 5.0);
    const auto edges = quantile_edges(x, 4);
    CHECK(edges == std::vector<double>{1, 2, 3, 4, 5});
    CHECK(quantile_bin(edges, 2.0) == 0);
    CHECK(quantile_bin(edges, 2.5) == 1);
    CHECK(quantile_bin(edges, -7) == 0);
    CHECK(quantile_bin(edges, 70) == 3);
}

TEST_CASE("calibration: k = 1 maps to the global mean") {
    SeededRng rng(18, "cal1");
    std::vector<double> s(100), gt(100);
    double mean = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = rng.uniform();
        gt[i] = rng.uniform(0, 50);
        mean += gt[i];
    }
    mean /= 100;
    const auto map = fit_quantile_map(s, gt, 1);
    for (double v : apply_quantile_map(map, s)) CHECK(v == doctest::Approx(mean).epsilon(1e-12));
    CHECK(apply_quantile_map(map, 1e9) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("calibration: scores equal to truth give the within-bin deviation") {
    SeededRng rng(19, "cal-self");
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x(50 + rng.uniform_index(500));
        for (auto& v : x) v = std::exp(rng.normal());
        const auto map = fit_quantile_map(x, x, 5);
        const auto pred = apply_quantile_map(map, x);
        double mae = 0;
        for (std::size_t i = 0; i < x.size(); ++i) mae += std::abs(pred[i] - x[i]);
        mae /= static_cast<double>(x.size());
        REQUIRE(std::abs(mae - testing::within_bin_deviation(x, 5)) < 1e-9);
    }
}

TEST_CASE("calibration: invariant under increasing score transforms") {
    SeededRng rng(20, "cal-inv");
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> s(30 + rng.uniform_index(300)), gt(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = rng.uniform(-2, 2);
            gt[i] = s[i] * 3 + rng.normal();
        }
        const auto base = apply_quantile_map(fit_quantile_map(s, gt, 5), s);
        std::vector<double> e(s.size()), a(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            e[i] = std::exp(s[i]);
            a[i] = 2.5 * s[i] + 7.0;
        }
        REQUIRE(apply_quantile_map(fit_quantile_map(e, gt, 5), e) == base);
        REQUIRE(apply_quantile_map(fit_quantile_map(a, gt, 5), a) == base);
    }
}

TEST_CASE("calibration: ties and degenerate input") {
    const std::vector<double> s{1, 1, 1, 1, 2, 2}, gt{1, 2, 3, 4, 5, 6};
    const auto map = fit_quantile_map(s, gt, 5);
    CHECK(map.k_reduced);
    CHECK(map.k == 2);
    CHECK_THROWS_AS(fit_quantile_map(std::vector<double>{}, std::vector<double>{}, 5), Error);
    // Scores and ground truth are binned as separate marginals, so lengths may differ.
    CHECK(fit_quantile_map(s, std::vector<double>{1, 2}, 5).target_means == std::vector<double>{1, 2});
    CHECK_THROWS_AS(fit_quantile_map(s, gt, 0), Error);
}

TEST_CASE("bin expectation") {
    CHECK(bin_expectation(std::vector<double>{0, 1, 0}, std::vector<double>{3, 5, 9}) == 5.0);
    CHECK(bin_expectation(std::vector<double>{0.25, 0.25, 0.25, 0.25}, std::vector<double>{1, 2, 3, 6}) == 3.0);
    CHECK(bin_expectation(std::vector<double>{0.2, 0.8}, std::vector<double>{10, 20}) == doctest::Approx(18.0));
    CHECK_THROWS_AS(bin_expectation(std::vector<double>{0.5, 0.6}, std::vector<double>{1, 2}), Error);
    CHECK_THROWS_AS(bin_expectation(std::vector<double>{-0.5, 1.5}, std::vector<double>{1, 2}), Error);
    CHECK_THROWS_AS(bin_expectation(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
}

TEST_CASE("knn: brute-force neighbours, exact training points and k = n") {
    SeededRng rng(21, "knn");
    const std::size_t n = 200, d = 16;
    std::vector<float> rows(n * d);
    std::vector<double> labels(n);
    for (auto& x : rows) x = static_cast<float>(rng.normal());
    for (auto& y : labels) y = rng.uniform(0, 100);
    const auto model = knn_fit(rows, d, labels, 5, KnnTask::Regression);
    for (int q = 0; q < 200; ++q) {
        std::vector<float> query(d);
        for (auto& x : query) x = static_cast<float>(rng.normal());
        REQUIRE(knn_neighbors(model, query) == testing::knn_reference(rows, d, query, 5));
    }
    const auto one = knn_fit(rows, d, labels, 1, KnnTask::Regression);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(knn_predict_value(one, std::span(rows).subspan(i * d, d)) == labels[i]);
    }
    const auto all = knn_fit(rows, d, labels, n, KnnTask::Regression);
    double mean = 0;
    for (double y : labels) mean += y;
    CHECK(knn_predict_value(all, std::span(rows).subspan(0, d)) == doctest::Approx(mean / n).epsilon(1e-12));

    std::vector<double> classes(n);
    for (std::size_t i = 0; i < n; ++i) classes[i] = static_cast<double>(i % 3);
    const auto cls = knn_fit(rows, d, classes, n, KnnTask::Classification, 3);
    const auto proba = knn_predict_proba(cls, std::span(rows).subspan(0, d));
    CHECK(proba[0] == doctest::Approx(67.0 / 200));
    CHECK(proba[1] == doctest::Approx(67.0 / 200));
    CHECK(proba[2] == doctest::Approx(66.0 / 200));

    const auto clamped = knn_fit(std::span(rows).subspan(0, 3 * d), d, std::span(labels).subspan(0, 3), 5,
                                 KnnTask::Regression);
    CHECK(clamped.k_clamped);
    CHECK(clamped.k == 3);
    CHECK_THROWS_AS(knn_fit(rows, d, labels, 0, KnnTask::Regression), Error);
}

TEST_CASE("knn: distance ties go to the lower index") {
    const std::vector<float> rows{1, 0, -1, 0, 0, 1, 0, -1};
    const std::vector<double> labels{1, 2, 3, 4};
    const auto model = knn_fit(rows, 2, labels, 2, KnnTask::Regression);
    CHECK(knn_neighbors(model, std::vector<float>{0, 0}) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("point in polygon: basics and winding-number oracle") {
    const std::vector<Vec2> tri{{0, 0}, {10, 0}, {0, 10}};
    CHECK(point_in_polygon({10.0 / 3, 10.0 / 3}, tri));
    CHECK_FALSE(point_in_polygon({20, 20}, tri));
    CHECK(point_in_polygon({5, 0}, tri));  // edge
    CHECK(point_in_polygon({0, 0}, tri));  // vertex
    CHECK(polygon_area(tri) == 50.0);

    SeededRng rng(22, "pip");
    std::size_t compared = 0;
    for (int poly = 0; poly < 50; ++poly) {
        const auto ring = testing::random_star_polygon(rng, {0, 0}, 5, 50, 3 + rng.uniform_index(20));
        for (int k = 0; k < 200; ++k) {
            const Vec2 p{rng.uniform(-60, 60), rng.uniform(-60, 60)};
            if (testing::distance_to_ring(p, ring) < 1e-9) continue;
            REQUIRE(point_in_polygon(p, ring) == (testing::winding_number(p, ring) != 0));
            ++compared;
        }
    }
    CHECK(compared >= 9990);
}

TEST_CASE("districts: validation") {
    DistrictSet set;
    set.districts.push_back(square("a", 0, 0, 10));
    set.districts.push_back(square("a", 20, 0, 10));
    CHECK_THROWS_AS(set.validate(), Error);
    set.districts[1].id = "b";
    set.validate();
    set.districts[1].rings[0] = {{0, 0}, {10, 10}, {10, 0}, {0, 10}};  // bow tie
    CHECK_THROWS_AS(set.validate(), Error);
    set.districts[1].rings[0] = {{0, 0}, {10, 10}};
    CHECK_THROWS_AS(set.validate(), Error);
}

TEST_CASE("district averages: single point, reference loop and empty districts") {
    SeededRng rng(23, "district");
    const auto store = testing::random_store(rng, 500, 2, 6, 0.3);
    DistrictSet set;
    set.districts.push_back(square("left", 0, 0, 40));
    set.districts.push_back(square("right", 60, 30, 40));
    set.districts.push_back(square("empty", 500, 500, 10));
    const auto avg = district_average_embeddings(store, set, 1);
    CHECK(avg.empty[2] == 1);
    CHECK(avg.counts[2] == 0);
    for (std::size_t d = 0; d < 2; ++d) {
        std::vector<double> sum(6, 0);
        std::size_t count = 0;
        for (std::size_t p = 0; p < store.size(); ++p) {
            if (store.obs_count(1, p) == 0) continue;
            const Vec2 xy{store.points()[p].x, store.points()[p].y};
            if (!testing::winding_number(xy, set.districts[d].rings[0])) continue;
            for (std::size_t k = 0; k < 6; ++k) sum[k] += store.feature(1, p)[k];
            ++count;
        }
        REQUIRE(count > 0);
        CHECK(avg.counts[d] == count);
        for (std::size_t k = 0; k < 6; ++k) CHECK(avg.means[d][k] == doctest::Approx(sum[k] / count).epsilon(1e-6));
    }

    DistrictSet one;
    one.districts.push_back(square("one", store.points()[0].x - 1e-3, store.points()[0].y - 1e-3, 2e-3));
    const auto single = district_average_embeddings(store, one, 0);
    if (store.obs_count(0, 0) > 0) {
        REQUIRE(single.counts[0] == 1);
        for (std::size_t k = 0; k < 6; ++k) CHECK(single.means[0][k] == store.feature(0, 0)[k]);
    }
}

TEST_CASE("crime density: normalisation, tails and Monte-Carlo agreement") {
    DistrictSet window;
    window.districts.push_back(square("w", -1000, -1000, 2000));  // 20 sigma
    const std::vector<CrimeEvent> one{{{3, -7}, 1.0}};
    const auto d = crime_density(one, window);
    CHECK(d.integral[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(d.per_km2_year[0] == doctest::Approx(d.integral[0] / 4.0));

    DistrictSet far;
    far.districts.push_back(square("f", 500, 0, 100));
    CHECK(crime_density(std::vector<CrimeEvent>{{{0, 50}, 1.0}}, far).integral[0] < 1e-20);

    DistrictSet big;
    big.districts.push_back(square("big", -400, -400, 800));
    const std::vector<CrimeEvent> center{{{10, 20}, 2.5}};
    const auto c = crime_density(center, big);
    CHECK(c.integral[0] == doctest::Approx(2.5).epsilon(1e-3));
    CHECK(c.per_km2_year[0] == doctest::Approx(2.5 / 0.64).epsilon(1e-3));

    SeededRng rng(24, "crime");
    const auto parts = testing::jittered_partition(rng, -200, -200, 100, 4, 0.2);
    std::vector<CrimeEvent> events;
    for (int i = 0; i < 8; ++i) events.push_back({{rng.uniform(-150, 150), rng.uniform(-150, 150)}, rng.uniform(0.5, 2)});
    const auto kde = crime_density(events, parts);
    SeededRng mc_rng(25, "crime-mc");
    const auto mc = testing::crime_monte_carlo(events, parts, kCrimeSigma, 100000, mc_rng);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        if (mc[k] < 0.05) continue;  // Monte-Carlo noise dominates below this
        INFO("district " << k << " kde " << kde.integral[k] << " mc " << mc[k]);
        CHECK(std::abs(kde.integral[k] - mc[k]) <= 0.03 * mc[k]);
    }
    CHECK_THROWS_AS(crime_density(std::vector<CrimeEvent>{{{0, 0}, -1.0}}, big), Error);
}

TEST_CASE("ground truth: csv, geojson and footprint labels") {
    testing::TempDir dir;
    const auto gt = GeoTransform::about(47.0, 8.0);
    CHECK(parse_csv("a,\"b,c\",\"say \"\"hi\"\"\"\n1,2,3\n") ==
          std::vector<std::vector<std::string>>{{"a", "b,c", "say \"hi\""}, {"1", "2", "3"}});
    {
        std::ofstream f(dir / "labels.csv");
        f << "unit,value,lon,lat,id\nm2,12.5,8.001,47.001,x1\nm2,3,8.0,47.0,x2\n";
    }
    const auto labels = read_point_labels_csv(dir / "labels.csv", gt);
    REQUIRE(labels.size() == 2);
    CHECK(labels[0].id == "x1");
    CHECK(labels[0].value == 12.5);
    CHECK(labels[0].position.y == doctest::Approx(111.19492664455874).epsilon(1e-9));
    CHECK(labels[1].position.x == doctest::Approx(0.0));
    {
        std::ofstream f(dir / "bad.csv");
        f << "id,lat,value,unit\n1,2,3,4\n";
    }
    CHECK_THROWS_AS(read_point_labels_csv(dir / "bad.csv", gt), Error);
    {
        std::ofstream f(dir / "crime.csv");
        f << "lat,lon,year\n47,8,2019\n47,8,2021\n47.001,8,2020\n";
    }
    const auto crimes = read_crime_csv(dir / "crime.csv", gt);
    REQUIRE(crimes.size() == 3);
    CHECK(crimes[0].weight == doctest::Approx(1.0 / 3));

    DistrictSet set;
    set.districts.push_back(square("a", 0, 0, 100));
    set.districts[0].value = 4.5;
    set.districts[0].unit = "CHF";
    set.districts.push_back(square("b", 200, 0, 50));
    const auto back = parse_districts_geojson(districts_to_geojson(set, gt), gt);
    REQUIRE(back.size() == 2);
    CHECK(back.districts[0].id == "a");
    CHECK(back.districts[0].value == 4.5);
    CHECK(back.districts[0].unit == "CHF");
    CHECK(back.districts[1].rings[0][2].x == doctest::Approx(250).epsilon(1e-9));
    CHECK_THROWS_AS(parse_districts_geojson(R"({"type": "Feature"})", gt), Error);

    const auto cells = footprint_cell_labels(set, {0, 0}, 10, 30, 2);
    CHECK(cells[0] == 1);
    CHECK(cells[9] == 1);
    CHECK(cells[10] == 0);
    CHECK(cells[20] == 1);
    CHECK(cells[25] == 0);
}
