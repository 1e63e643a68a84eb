#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "eval/benchmark.hpp"
#include "eval/metrics.hpp"
#include "oracles.hpp"
#include "synth/benchmark_data.hpp"

using namespace urbanfield;
using namespace urbanfield::eval;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Internal;
}

}  // namespace

TEST_CASE("roc auc: pair-counting oracle with ties") {
    SeededRng rng(30, "roc");
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> s(500);
        std::vector<int> y(500);
        for (std::size_t i = 0; i < s.size(); ++i) {
            y[i] = rng.uniform() < 0.3 ? 1 : 0;
            s[i] = std::round(rng.uniform(0, 20) + 3 * y[i]) / 2;  // heavy ties
        }
        REQUIRE(std::abs(roc_auc(s, y) - testing::roc_auc_pairs(s, y)) <= 1e-12);
    }
    CHECK(roc_auc(std::vector<double>{1, 2, 3, 4}, std::vector<int>{0, 0, 1, 1}) == 1.0);
    CHECK(roc_auc(std::vector<double>{4, 3, 2, 1}, std::vector<int>{0, 0, 1, 1}) == 0.0);
    CHECK(roc_auc(std::vector<double>{1, 1, 1, 1}, std::vector<int>{0, 1, 0, 1}) == 0.5);
    CHECK(code_of([] { roc_auc(std::vector<double>{1, 2}, std::vector<int>{1, 1}); }) == ErrorCode::UndefinedMetric);
    CHECK(code_of([] { roc_auc(std::vector<double>{1, 2}, std::vector<int>{1, 2}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("spearman: rank-then-Pearson oracle") {
    SeededRng rng(31, "spearman");
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a(300), b(300);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = std::round(rng.uniform(0, 50));
            b[i] = a[i] + rng.normal() * 10;
        }
        REQUIRE(std::abs(spearman(a, b) - testing::spearman_reference(a, b)) <= 1e-12);
        REQUIRE(average_ranks(a) == testing::ranks_quadratic(a));
    }
    const std::vector<double> x{1, 2, 3, 4, 5}, sq{1, 4, 9, 16, 25}, rev{5, 4, 3, 2, 1};
    CHECK(spearman(x, sq) == doctest::Approx(1.0));
    CHECK(spearman(x, rev) == doctest::Approx(-1.0));
    CHECK(code_of([] { spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}); }) ==
          ErrorCode::UndefinedMetric);
    CHECK(code_of([] { pearson(std::vector<double>{1}, std::vector<double>{1}); }) == ErrorCode::UndefinedMetric);
}

TEST_CASE("max accuracy: exhaustive threshold scan") {
    SeededRng rng(32, "maxacc");
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> s(1 + rng.uniform_index(200));
        std::vector<int> y(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            y[i] = rng.uniform() < 0.5 ? 1 : 0;
            s[i] = std::round(rng.uniform(0, 10) + 2 * y[i]);
        }
        if (std::count(y.begin(), y.end(), 1) % static_cast<long>(y.size()) == 0) {
            REQUIRE(code_of([&] { best_threshold(s, y); }) == ErrorCode::UndefinedMetric);
            continue;
        }
        const auto best = best_threshold(s, y);
        REQUIRE(best.accuracy == testing::max_accuracy_scan(s, y));
        std::size_t correct = 0;
        for (std::size_t i = 0; i < s.size(); ++i) correct += ((s[i] >= best.threshold) == (y[i] == 1));
        REQUIRE(static_cast<double>(correct) / s.size() == best.accuracy);
    }
    CHECK(max_accuracy(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}) == 1.0);
}

TEST_CASE("classification metrics") {
    const std::vector<int> truth{0, 0, 1, 1, 2, 2}, perfect = truth;
    CHECK(f1_macro(perfect, truth, 3) == 1.0);
    const auto c = confusion(perfect, truth, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(c[i][j] == (i == j ? 2u : 0u));

    const std::vector<int> pred{0, 1, 1, 1, 2, 0};
    const auto m = confusion(pred, truth, 3);
    CHECK(m[0][0] == 1);
    CHECK(m[0][1] == 1);
    CHECK(m[2][0] == 1);
    for (std::size_t i = 0; i < 3; ++i) CHECK(m[i][0] + m[i][1] + m[i][2] == 2);
    // Per class: F1(0) = 0.5, F1(1) = 0.8, F1(2) = 2/3.
    CHECK(f1_macro(pred, truth, 3) == doctest::Approx((0.5 + 0.8 + 2.0 / 3) / 3));
    CHECK(accuracy(pred, truth) == doctest::Approx(4.0 / 6));

    CHECK(f1_binary(std::vector<int>{1, 1, 0, 0}, std::vector<int>{1, 0, 1, 0}) == doctest::Approx(0.5));
    CHECK(f1_binary(std::vector<int>{0, 0}, std::vector<int>{1, 0}) == 0.0);
    CHECK_THROWS_AS(confusion(std::vector<int>{3}, std::vector<int>{0}, 3), Error);
}

TEST_CASE("regression metrics") {
    const std::vector<double> truth{1, 2, 0, 4}, pred{2, 2, 1, 2};
    CHECK(mae(pred, truth) == doctest::Approx(1.0));
    CHECK(rmse(pred, truth) == doctest::Approx(std::sqrt(6.0 / 4)));
    const auto m = mape(pred, truth);
    CHECK(m.used == 3);
    CHECK(m.excluded == 1);
    CHECK(m.percent == doctest::Approx(100.0 * (1.0 + 0.0 + 0.5) / 3));
    CHECK(code_of([] { mape(std::vector<double>{1}, std::vector<double>{0}); }) == ErrorCode::UndefinedMetric);
    CHECK_THROWS_AS(mae(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
}

TEST_CASE("benchmark: seed determinism and seed sensitivity") {
    const auto tasks = synth::synthetic_benchmark_tasks(7);
    SplitSpec split;
    split.seed = 3;
    const auto a = report_to_json(run_benchmark(tasks, split));
    CHECK(a == report_to_json(run_benchmark(tasks, split)));
    CHECK(a == report_to_json(run_benchmark(synth::synthetic_benchmark_tasks(7), split)));
    split.seed = 4;
    CHECK(a != report_to_json(run_benchmark(tasks, split)));
    const auto j = nlohmann::json::parse(a);
    CHECK(j.at("tasks").size() == tasks.size());
    CHECK(report_to_table(run_benchmark(tasks, split)).find(tasks[0].name) != std::string::npos);
}

TEST_CASE("benchmark: scores equal to truth") {
    SeededRng rng(33, "identity");
    BenchmarkTask t;
    t.name = "identity";
    for (int i = 0; i < 400; ++i) t.truth.push_back(std::exp(rng.normal()));
    t.scores = t.truth;
    const auto r = run_task(t, {});
    CHECK(r.error.empty());
    CHECK(*r.metrics.at("spearman").value == doctest::Approx(1.0));
    CHECK(std::abs(*r.metrics.at("mae").value - testing::within_bin_deviation(t.truth, 5)) < 1e-9);
}

TEST_CASE("benchmark: modes, caps and per-metric failures") {
    SeededRng rng(34, "modes");
    BenchmarkTask bin;
    bin.name = "bin";
    bin.kind = TaskKind::Binary;
    for (int i = 0; i < 1000; ++i) {
        bin.truth.push_back(rng.uniform() < 0.4 ? 1 : 0);
        bin.scores.push_back(bin.truth.back() + rng.normal());
    }
    auto r = run_task(bin, {});
    CHECK(*r.metrics.at("roc_auc").value == doctest::Approx(testing::roc_auc_pairs(bin.scores, [&] {
        std::vector<int> y(bin.truth.begin(), bin.truth.end());
        return y;
    }())).epsilon(1e-12));
    CHECK(r.confusion.size() == 2);

    bin.mode = BenchmarkMode::QuantileCalibrated;
    SplitSpec split;
    split.validation_point_cap = 100;
    r = run_task(bin, split);
    CHECK(r.error.empty());
    CHECK(r.metrics.at("accuracy").count == 100 * split.draws);

    BenchmarkTask single = bin;
    single.name = "single";
    single.mode = BenchmarkMode::ZeroShot;
    for (auto& y : single.truth) y = 1;
    r = run_task(single, {});
    CHECK_FALSE(r.metrics.at("roc_auc").value.has_value());
    CHECK_FALSE(r.metrics.at("roc_auc").error.empty());

    BenchmarkTask knn;
    knn.name = "knn";
    knn.mode = BenchmarkMode::Knn;
    knn.dim = 4;
    for (int i = 0; i < 300; ++i) {
        const double z = rng.uniform(0, 10);
        knn.truth.push_back(z);
        for (int k = 0; k < 4; ++k) knn.features.push_back(static_cast<float>(z * (k + 1) + rng.normal()));
    }
    r = run_task(knn, {});
    CHECK(r.error.empty());
    CHECK(*r.metrics.at("spearman").value > 0.8);

    BenchmarkTask broken = knn;
    broken.features.pop_back();
    r = run_task(broken, {});
    CHECK_FALSE(r.error.empty());
    const auto report = run_benchmark({broken, knn}, {});
    CHECK(report.tasks.size() == 2);
    CHECK(report.tasks[1].error.empty());

    SplitSpec bad;
    bad.train_fraction = 1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    CHECK_THROWS_AS(parse_mode("fancy"), Error);
    CHECK(parse_mode(mode_name(BenchmarkMode::Knn)) == BenchmarkMode::Knn);
}
