#include <doctest.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>

#include "core/errors.hpp"
#include "core/image.hpp"
#include "core/rng.hpp"
#include "segment/embeddings.hpp"
#include "segment/provider.hpp"
#include "segment/segments.hpp"
#include "test_support.hpp"

using namespace urbanfield;
using namespace urbanfield::seg;

namespace {

SegmentRecord rect_mask(int w, int h, int x0, int y0, int x1, int y1, int level = 1,
                        std::int64_t view = 0) {
    std::vector<std::uint8_t> bm(static_cast<std::size_t>(w) * h, 0);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) bm[static_cast<std::size_t>(y) * w + x] = 1;
    return make_segment(view, level, w, h, encode_runs(bm));
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += double(a[i]) * b[i];
        aa += double(a[i]) * a[i];
        bb += double(b[i]) * b[i];
    }
    return ab / std::sqrt(aa * bb);
}

double norm(const std::vector<float>& v) {
    double s = 0;
    for (float x : v) s += double(x) * x;
    return std::sqrt(s);
}

RgbImage noise_image(SeededRng& rng, int w, int h) {
    RgbImage img(w, h);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.uniform_index(256));
    return img;
}

std::string fake(const std::string& flags = "") {
    return std::string("cmd:") + UF_FAKE_PROVIDER + (flags.empty() ? "" : " " + flags);
}

std::string provider_message(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Provider);
        return e.what();
    }
    FAIL("expected a provider error");
    return {};
}

}  // namespace

TEST_CASE("runs: encode and decode round trip") {
    SeededRng rng(3, "runs");
    for (int trial = 0; trial < 50; ++trial) {
        const int w = 1 + static_cast<int>(rng.uniform_index(40));
        const int h = 1 + static_cast<int>(rng.uniform_index(40));
        std::vector<std::uint8_t> bm(static_cast<std::size_t>(w) * h);
        for (auto& b : bm) b = rng.uniform() < 0.4 ? 1 : 0;
        const auto rec = make_segment(1, 2, w, h, encode_runs(bm));
        rec.validate();
        CHECK(rec.bitmap() == bm);
        std::uint64_t area = 0;
        for (auto b : bm) area += b;
        CHECK(rec.area_px == area);
    }
    CHECK(encode_runs(std::vector<std::uint8_t>{0, 1, 1, 0, 1}) == std::vector<Run>{{1, 2}, {4, 1}});
}

TEST_CASE("runs: validation rejects malformed records") {
    auto r = make_segment(0, 1, 4, 4, {{2, 3}, {8, 2}});
    r.validate();
    auto overlap = r;
    overlap.runs = {{2, 3}, {4, 2}};
    CHECK_THROWS_AS(overlap.validate(), Error);
    auto oob = r;
    oob.runs = {{15, 2}};
    CHECK_THROWS_AS(oob.validate(), Error);
    auto area = r;
    area.area_px = 4;
    CHECK_THROWS_AS(area.validate(), Error);
    auto level = r;
    level.level = 4;
    CHECK_THROWS_AS(level.validate(), Error);
}

TEST_CASE("filter: minimum area on a 512x512 image") {
    const std::uint64_t pixels = 512 * 512;
    CHECK(min_area_pixels(pixels, 0.0025) == 655);
    std::vector<SegmentRecord> recs;
    recs.push_back(make_segment(0, 1, 512, 512, {{0, 655}}));
    recs.push_back(make_segment(0, 1, 512, 512, {{0, 654}}));
    recs.push_back(make_segment(0, 2, 512, 512, {{1000, 5000}}));
    const auto kept = filter_segments(recs, pixels);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].area_px == 655);
    CHECK(kept[1].area_px == 5000);
    CHECK(filter_segments(recs, pixels, 0.0).size() == 3);
    CHECK_THROWS_AS(min_area_pixels(pixels, 1.5), Error);
}

TEST_CASE("highlight: 10x10 image with a centered 4x4 mask") {
    RgbImage img(10, 10);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) {
            auto* p = img.at(x, y);
            p[0] = static_cast<std::uint8_t>(10 * x);
            p[1] = static_cast<std::uint8_t>(10 * y);
            p[2] = 100;
        }
    const auto rec = rect_mask(10, 10, 3, 3, 6, 6);
    HighlightSpec spec;
    spec.crop_padding = 0;
    spec.outline_width = 1;
    const auto out = crop_and_highlight(img, rec, spec);
    REQUIRE(out.width == 4);
    REQUIRE(out.height == 4);
    // Straight-line reference: ring of width 1 is red, the 2x2 core untouched.
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            const bool ring = x == 0 || y == 0 || x == 3 || y == 3;
            const auto* src = img.at(x + 3, y + 3);
            const auto* got = out.at(x, y);
            for (int c = 0; c < 3; ++c) {
                const int want = ring ? (c == 0 ? 255 : 0) : src[c];
                CHECK(int(got[c]) == want);
            }
        }
    spec.outline_width = 2;
    const auto thick = crop_and_highlight(img, rec, spec);
    for (int i = 0; i < 16; ++i) CHECK(thick.pixels[3 * i] == 255);
}

TEST_CASE("highlight: padding, background blending and full masks") {
    RgbImage img(20, 20, {100, 50, 0});
    const auto rec = rect_mask(20, 20, 5, 5, 14, 14);
    HighlightSpec spec;
    spec.crop_padding = 0.2;  // 2 px each side
    const auto out = crop_and_highlight(img, rec, spec);
    CHECK(out.width == 14);
    CHECK(out.height == 14);
    const auto* bg = out.at(0, 0);
    CHECK(int(bg[0]) == std::lround(0.4 * 100 + 0.6 * 255));
    CHECK(int(bg[1]) == std::lround(0.4 * 50 + 0.6 * 255));
    CHECK(int(bg[2]) == std::lround(0.6 * 255));
    const auto* core = out.at(7, 7);
    CHECK(int(core[0]) == 100);

    const auto full = rect_mask(20, 20, 0, 0, 19, 19);
    const auto f = crop_and_highlight(img, full, spec);
    CHECK(f.width == 20);
    CHECK(int(f.at(0, 10)[0]) == 255);
    CHECK(int(f.at(1, 10)[1]) == 0);
    CHECK(int(f.at(2, 10)[1]) == 50);  // no background pixels anywhere
    CHECK(int(f.at(10, 10)[1]) == 50);

    spec.outline_width = 0;
    CHECK_THROWS_AS(crop_and_highlight(img, rec, spec), Error);
}

TEST_CASE("highlight: pixels inside the outline band are unchanged") {
    SeededRng rng(8, "highlight");
    for (int trial = 0; trial < 30; ++trial) {
        const int w = 16 + static_cast<int>(rng.uniform_index(30));
        const int h = 16 + static_cast<int>(rng.uniform_index(30));
        const auto img = noise_image(rng, w, h);
        std::vector<std::uint8_t> bm(static_cast<std::size_t>(w) * h);
        const double cx = rng.uniform(0, w), cy = rng.uniform(0, h), r = rng.uniform(3, 12);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) bm[std::size_t(y) * w + x] = std::hypot(x - cx, y - cy) < r;
        const auto rec = make_segment(0, 1, w, h, encode_runs(bm));
        if (rec.area_px == 0) continue;
        HighlightSpec spec;
        spec.crop_padding = rng.uniform(0, 0.5);
        const auto out = crop_and_highlight(img, rec, spec);
        const auto box = *rec.bounding_box();
        const int px = static_cast<int>(std::lround(spec.crop_padding * (box.x1 - box.x0 + 1)));
        const int py = static_cast<int>(std::lround(spec.crop_padding * (box.y1 - box.y0 + 1)));
        const int x0 = std::max(0, box.x0 - px), y0 = std::max(0, box.y0 - py);
        for (int y = 0; y < out.height; ++y)
            for (int x = 0; x < out.width; ++x) {
                const int ix = x + x0, iy = y + y0;
                bool deep = true;
                for (int dy = -2; dy <= 2; ++dy)
                    for (int dx = -2; dx <= 2; ++dx) {
                        const int xx = ix + dx, yy = iy + dy;
                        if (xx < 0 || yy < 0 || xx >= w || yy >= h || !bm[std::size_t(yy) * w + xx]) deep = false;
                    }
                if (deep) {
                    for (int c = 0; c < 3; ++c) REQUIRE(out.at(x, y)[c] == img.at(ix, iy)[c]);
                }
            }
    }
}

TEST_CASE("pixel level map: smallest area wins, then lowest index") {
    std::vector<SegmentRecord> recs;
    recs.push_back(rect_mask(8, 8, 0, 0, 7, 7, 1));  // 64
    recs.push_back(rect_mask(8, 8, 2, 2, 5, 5, 1));  // 16
    recs.push_back(rect_mask(8, 8, 4, 4, 7, 7, 1));  // 16, overlaps the previous at (4..5, 4..5)
    recs.push_back(rect_mask(8, 8, 0, 0, 1, 1, 3));
    const auto map = build_pixel_level_map(recs);
    CHECK(map.at(1, 0) == 0);
    CHECK(map.at(1, 2 * 8 + 2) == 1);
    CHECK(map.at(1, 4 * 8 + 4) == 1);
    CHECK(map.at(1, 7 * 8 + 7) == 2);
    CHECK(map.at(2, 0) == -1);
    CHECK(map.at(3, 0) == 3);
    CHECK(map.at(3, 63) == -1);
    recs.push_back(rect_mask(8, 8, 0, 0, 1, 1, 1, 9));
    CHECK_THROWS_AS(build_pixel_level_map(recs), Error);
}

TEST_CASE("masks: json lines round trip and errors") {
    testing::TempDir dir;
    std::vector<SegmentRecord> recs{rect_mask(6, 4, 1, 1, 3, 2, 1, 5), rect_mask(6, 4, 0, 0, 5, 3, 3, 6)};
    recs[1].segment_id = 7;
    recs[1].embedding = std::vector<float>{0.6f, 0.8f};
    write_masks(recs, dir / "m.jsonl");
    const auto back = read_masks(dir / "m.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(back[0].runs == recs[0].runs);
    CHECK(back[0].view_id == 5);
    CHECK(back[1].segment_id == 7);
    CHECK(back[1].level == 3);
    REQUIRE(back[1].embedding.has_value());
    CHECK((*back[1].embedding)[1] == doctest::Approx(0.8));

    std::ofstream(dir / "bad.jsonl") << "{\"view_id\":1,\"level\":1,\"width\":4,\"height\":4,\"runs\":[[3,20]]}\n";
    CHECK_THROWS_AS(read_masks(dir / "bad.jsonl"), Error);
    std::ofstream(dir / "junk.jsonl") << "not json\n";
    CHECK_THROWS_AS(read_masks(dir / "junk.jsonl"), Error);
}

TEST_CASE("embeddings table: round trip") {
    testing::TempDir dir;
    SeededRng rng(2, "emb");
    EmbeddingTable t;
    t.dim = 5;
    t.insert({3, 0, -1}, testing::random_unit(rng, 5));
    t.insert({3, 2, 4}, testing::random_unit(rng, 5));
    t.insert({1, 1, 0}, testing::random_unit(rng, 5));
    CHECK_THROWS_AS(t.insert({1, 1, 1}, std::vector<float>(4, 0.5f)), Error);
    write_embeddings(t, dir / "e.oc3e");
    const auto back = read_embeddings(dir / "e.oc3e");
    CHECK(back.dim == 5);
    CHECK(back.rows == t.rows);
    CHECK(back.find({9, 9, 9}) == nullptr);
}

TEST_CASE("stub provider: unit norm, determinism and color separation") {
    StubProvider stub;
    SeededRng rng(1, "stub");
    for (int i = 0; i < 10; ++i) {
        const auto img = noise_image(rng, 12, 9);
        const auto e = stub.embed_image(img);
        CHECK(e.size() == StubProvider::kDim);
        CHECK(norm(e) == doctest::Approx(1.0).epsilon(1e-5));
        CHECK(e == stub.embed_image(img));
    }
    const auto t = stub.embed_text("a tall building");
    CHECK(norm(t) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(t == StubProvider().embed_text("a tall building"));
    CHECK(t == stub.embed_text("A TALL BUILDING"));
    CHECK(t != stub.embed_text("a short building"));

    const auto red = stub.embed_image(RgbImage(8, 8, {220, 40, 40}));
    const auto blue = stub.embed_image(RgbImage(8, 8, {40, 80, 220}));
    CHECK(cosine(red, blue) < 0.9);
    CHECK(stub.embed_text("red roofs") == red);
    CHECK(cosine(stub.embed_text("blue"), blue) == doctest::Approx(1.0));

    const double s_match = stub.score_image(RgbImage(8, 8, {220, 40, 40}), "red");
    const double s_other = stub.score_image(RgbImage(8, 8, {220, 40, 40}), "blue");
    CHECK(s_match == doctest::Approx(10.0));
    CHECK(s_other < s_match);
    CHECK(s_other >= 0.0);
}

TEST_CASE("process provider: matches the stub through the protocol") {
    auto p = open_provider(fake());
    StubProvider stub;
    CHECK(p->kind() == ProviderKind::External);
    CHECK(p->dim() == 16);
    SeededRng rng(4, "proc");
    for (int i = 0; i < 5; ++i) {
        const auto img = noise_image(rng, 10, 10);
        const auto a = p->embed_image(img), b = stub.embed_image(img);
        REQUIRE(a.size() == b.size());
        for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-6));
        CHECK(p->score_image(img, "green") == doctest::Approx(stub.score_image(img, "green")).epsilon(1e-6));
    }
    const auto a = p->embed_text("bridge"), b = stub.embed_text("bridge");
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-6));
}

TEST_CASE("process provider: failure modes") {
    SUBCASE("missing handshake learns the dimension lazily") {
        auto p = open_provider(fake("--no-handshake"));
        CHECK(p->embed_text("red").size() == 16);
        CHECK(p->dim() == 16);
    }
    SUBCASE("child exits") {
        auto p = open_provider(fake("--die-after 2"));
        p->embed_text("a");
        const auto msg = provider_message([&] { p->embed_text("b"); });
        CHECK(msg.find("exited") != std::string::npos);
    }
    SUBCASE("malformed reply carries the payload") {
        auto p = open_provider(fake("--garbage"));
        const auto msg = provider_message([&] { p->embed_text("a"); });
        CHECK(msg.find("malformed provider reply") != std::string::npos);
        CHECK(msg.find("this is not json") != std::string::npos);
    }
    SUBCASE("wrong dimension") {
        auto p = open_provider(fake("--wrong-dim"));
        const auto msg = provider_message([&] { p->embed_text("a"); });
        CHECK(msg.find("components") != std::string::npos);
    }
    SUBCASE("error reply") {
        auto p = open_provider(fake("--error-on park"));
        CHECK(p->embed_text("lake").size() == 16);
        const auto msg = provider_message([&] { p->embed_text("park"); });
        CHECK(msg.find("refusing park") != std::string::npos);
        CHECK(p->embed_text("lake").size() == 16);
    }
    SUBCASE("timeout") {
        ProcessOptions opt;
        opt.timeout = std::chrono::milliseconds(200);
        const auto start = std::chrono::steady_clock::now();
        const auto msg = provider_message([&] { open_provider(fake("--sleep-ms 2000"), opt); });
        CHECK(msg.find("timed out") != std::string::npos);
        CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(2));
    }
    SUBCASE("scores are clamped") {
        auto p = open_provider(fake("--score 12.5"));
        CHECK(p->score_image(RgbImage(8, 8), "x") == 10.0);
    }
    SUBCASE("unknown spec and missing program") {
        CHECK_THROWS_AS(open_provider("magic"), Error);
        CHECK_THROWS_AS(open_provider("cmd:/nonexistent/provider-binary"), Error);
    }
}
