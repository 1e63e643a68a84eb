#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "test_support.hpp"

using nlohmann::json;

namespace {

struct Run {
    int status = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Run run(const testing::TempDir& dir, const std::string& args) {
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    const std::string cmd = std::string("'") + UF_CLI + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
    const int raw = std::system(cmd.c_str());
    Run r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

// Three poses on a 15 m row over a small city, all kept.
struct ThreeViews {
    testing::TempDir dir{"uf-cli"};
    std::string config;

    ThreeViews() {
        const auto r = run(dir, "synth '" + dir.path().string() +
                                    "' --points 4000 --image-size 64 --spacing 15"
                                    " --view-bounds 100 100 140 101 --keep-all-views");
        REQUIRE(r.status == 0);
        config = (dir / "config.json").string();
    }
};

}  // namespace

TEST_CASE("cli: fuse twice gives a byte-identical store") {
    ThreeViews f;
    const auto rv = run(f.dir, "render-views --config '" + f.config + "'");
    REQUIRE(rv.status == 0);
    CHECK(json::parse(rv.out)["kept"] == 3);

    REQUIRE(run(f.dir, "fuse --config '" + f.config + "'").status == 0);
    const auto first = slurp(f.dir / "store.oc3d");
    REQUIRE(run(f.dir, "fuse --config '" + f.config + "'").status == 0);
    const auto second = slurp(f.dir / "store.oc3d");
    CHECK(first.size() > 0);
    CHECK(first == second);
}

TEST_CASE("cli: query scores lie in (0, 1]") {
    ThreeViews f;
    REQUIRE(run(f.dir, "render-views --config '" + f.config + "'").status == 0);
    REQUIRE(run(f.dir, "fuse --config '" + f.config + "'").status == 0);
    const auto r = run(f.dir, "query --config '" + f.config +
                                  "' --positive building --negative tree --negative road");
    REQUIRE(r.status == 0);
    const auto doc = json::parse(r.out);
    std::size_t seen = 0;
    for (const auto& v : doc["values"]) {
        if (v.is_null()) continue;
        const double x = v.get<double>();
        CHECK(x > 0.0);
        CHECK(x <= 1.0);
        ++seen;
    }
    CHECK(seen > 0);
    CHECK(doc["observed_points"].get<std::size_t>() > 0);
}

TEST_CASE("cli: evaluate reproduces the golden report") {
    testing::TempDir dir{"uf-cli"};
    const std::string golden = UF_GOLDEN_DIR;
    const auto out = dir / "report.json";
    const auto r = run(dir, "evaluate --config '" + golden + "/benchmark_config.json' --out '" + out.string() + "'");
    REQUIRE(r.status == 0);
    CHECK(slurp(out) == slurp(golden + "/benchmark_report.json"));

    const auto piped = run(dir, "evaluate --config '" + golden + "/benchmark_config.json'");
    REQUIRE(piped.status == 0);
    CHECK(piped.out == slurp(out));
}

TEST_CASE("cli: config errors exit 2 with one diagnostic line") {
    testing::TempDir dir{"uf-cli"};
    std::ofstream(dir / "bad.json") << R"({"fusion": {"chunk_size": -1}})";
    const auto r = run(dir, "fuse --config '" + (dir / "bad.json").string() + "'");
    CHECK(r.status == 2);
    CHECK(r.out.empty());
    CHECK(count_lines(r.err) == 1);
    CHECK(r.err.rfind("urbanfield: config_error: ", 0) == 0);

    std::ofstream(dir / "broken.json") << "{not json";
    const auto b = run(dir, "query --config '" + (dir / "broken.json").string() + "'");
    CHECK(b.status == 2);
    CHECK(count_lines(b.err) == 1);
}

TEST_CASE("cli: runtime failures exit nonzero") {
    ThreeViews f;
    // No store has been fused yet.
    const auto q = run(f.dir, "query --config '" + f.config + "'");
    CHECK(q.status != 0);
    CHECK(count_lines(q.err) == 1);
    CHECK(q.err.rfind("urbanfield: ", 0) == 0);

    REQUIRE(run(f.dir, "render-views --config '" + f.config + "'").status == 0);
    const auto p = run(f.dir, "fuse --config '" + f.config + "' --provider 'cmd:" + UF_FAKE_PROVIDER +
                                  " --wrong-dim'");
    CHECK(p.status == 1);
    CHECK(p.err.rfind("urbanfield: provider_error: ", 0) == 0);

    CHECK(run(f.dir, "explode").status != 0);
}
