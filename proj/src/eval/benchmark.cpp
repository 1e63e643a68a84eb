#include "eval/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>

#include <json.hpp>

#include "analytics/calibration.hpp"
#include "analytics/knn.hpp"
#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"
#include "core/sampling.hpp"
#include "eval/metrics.hpp"

namespace urbanfield::eval {

namespace an = urbanfield::analytics;

const char* mode_name(BenchmarkMode mode) {
    switch (mode) {
        case BenchmarkMode::ZeroShot: return "zero_shot";
        case BenchmarkMode::QuantileCalibrated: return "quantile_calibrated";
        case BenchmarkMode::Knn: return "knn";
    }
    return "?";
}

const char* kind_name(TaskKind kind) {
    return kind == TaskKind::Binary ? "binary" : "continuous";
}

BenchmarkMode parse_mode(const std::string& name) {
    if (name == "zero_shot") return BenchmarkMode::ZeroShot;
    if (name == "quantile_calibrated") return BenchmarkMode::QuantileCalibrated;
    if (name == "knn") return BenchmarkMode::Knn;
    invalid_argument("unknown benchmark mode '" + name + "' (expected zero_shot, quantile_calibrated or knn)");
}

TaskKind parse_kind(const std::string& name) {
    if (name == "binary") return TaskKind::Binary;
    if (name == "continuous") return TaskKind::Continuous;
    invalid_argument("unknown task kind '" + name + "' (expected binary or continuous)");
}

void SplitSpec::validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) invalid_argument("train_fraction must be in (0, 1)");
    if (draws < 1) invalid_argument("draws must be at least 1");
    if (validation_point_cap < 1) invalid_argument("validation_point_cap must be at least 1");
}

void BenchmarkTask::validate() const {
    const std::string where = "task '" + name + "': ";
    if (truth.empty()) invalid_argument(where + "no samples");
    for (double t : truth) {
        if (!std::isfinite(t)) invalid_argument(where + "non-finite ground truth");
        if (kind == TaskKind::Binary && t != 0.0 && t != 1.0) invalid_argument(where + "binary truth must be 0 or 1");
    }
    if (quantiles < 1) invalid_argument(where + "quantiles must be at least 1");
    if (mode == BenchmarkMode::Knn) {
        if (dim == 0 || features.size() != truth.size() * dim) {
            invalid_argument(where + "knn mode needs n x dim features");
        }
        if (knn_k < 1) invalid_argument(where + "k must be at least 1");
    } else {
        if (scores.size() != truth.size()) invalid_argument(where + "scores and truth differ in length");
        for (double s : scores) {
            if (!std::isfinite(s)) invalid_argument(where + "non-finite score");
        }
    }
}

namespace {

struct DrawMetric {
    std::optional<double> value;
    std::string unit;
    std::size_t count = 0;
    std::string error;
};

struct DrawResult {
    std::map<std::string, DrawMetric> metrics;
    std::vector<std::vector<std::size_t>> confusion;
    std::vector<std::string> notes;
};

void record(DrawResult& r, const std::string& name, const std::string& unit, std::size_t count,
            const std::function<double()>& fn) {
    DrawMetric m;
    m.unit = unit;
    try {
        m.value = fn();
        m.count = count;
    } catch (const Error& e) {
        m.error = std::string(error_code_name(e.code())) + ": " + e.what();
    }
    r.metrics[name] = std::move(m);
}

template <typename T>
std::vector<T> gather(const std::vector<T>& v, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(v[i]);
    return out;
}

std::vector<float> gather_rows(const std::vector<float>& v, std::size_t dim, const std::vector<std::size_t>& idx) {
    std::vector<float> out;
    out.reserve(idx.size() * dim);
    for (auto i : idx) out.insert(out.end(), v.begin() + static_cast<std::ptrdiff_t>(i * dim),
                                  v.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
    return out;
}

std::vector<int> to_labels(const std::vector<double>& truth) {
    std::vector<int> out;
    out.reserve(truth.size());
    for (double t : truth) out.push_back(t != 0.0 ? 1 : 0);
    return out;
}

void continuous_value_metrics(DrawResult& r, const std::vector<double>& pred, const std::vector<double>& truth,
                              const std::string& unit) {
    record(r, "mae", unit, pred.size(), [&] { return mae(pred, truth); });
    record(r, "rmse", unit, pred.size(), [&] { return rmse(pred, truth); });
    std::size_t used = 0;
    record(r, "mape", "%", 0, [&] {
        const auto m = mape(pred, truth);
        used = m.used;
        return m.percent;
    });
    r.metrics["mape"].count = r.metrics["mape"].value ? used : 0;
}

void class_metrics(DrawResult& r, const std::vector<int>& pred, const std::vector<int>& truth, std::size_t k) {
    record(r, "f1", "", pred.size(), [&] { return k == 2 ? f1_binary(pred, truth) : f1_macro(pred, truth, k); });
    record(r, "accuracy", "", pred.size(), [&] { return accuracy(pred, truth); });
    r.confusion = confusion(pred, truth, k);
}

// Zero-shot: rank metrics on everything, quantile matching for the rest.
DrawResult zero_shot(const BenchmarkTask& task) {
    DrawResult r;
    const auto& s = task.scores;
    if (task.kind == TaskKind::Binary) {
        const auto labels = to_labels(task.truth);
        record(r, "roc_auc", "", s.size(), [&] { return roc_auc(s, labels); });
        record(r, "max_accuracy", "", s.size(), [&] { return max_accuracy(s, labels); });
        try {
            const auto t = best_threshold(s, labels).threshold;
            std::vector<int> pred;
            for (double v : s) pred.push_back(v >= t ? 1 : 0);
            class_metrics(r, pred, labels, 2);
        } catch (const Error& e) {
            r.notes.push_back(std::string("threshold: ") + e.what());
        }
        return r;
    }
    record(r, "spearman", "", s.size(), [&] { return spearman(s, task.truth); });
    const auto map = an::fit_quantile_map(s, task.truth, task.quantiles);
    if (map.k_reduced) r.notes.push_back("quantiles reduced to " + std::to_string(map.k));
    const auto pred = an::apply_quantile_map(map, s);
    continuous_value_metrics(r, pred, task.truth, task.unit);
    const auto truth_edges = an::quantile_edges(task.truth, map.k);
    std::vector<int> pc, tc;
    for (std::size_t i = 0; i < s.size(); ++i) {
        pc.push_back(static_cast<int>(an::quantile_bin(map.score_edges, s[i])));
        tc.push_back(static_cast<int>(an::quantile_bin(truth_edges, task.truth[i])));
    }
    class_metrics(r, pc, tc, map.k);
    return r;
}

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

Split draw_split(std::size_t n, const SplitSpec& split, SeededRng rng) {
    if (n < 2) invalid_argument("a train/test split needs at least two samples");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
    }
    const auto n_train = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(split.train_fraction * static_cast<double>(n))), 1, n - 1);
    Split s;
    s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    if (s.test.size() > split.validation_point_cap) {
        auto cap_rng = rng.derive("validation");
        s.test = gather(s.test, sample_indices(s.test.size(), split.validation_point_cap, cap_rng));
    }
    return s;
}

DrawResult calibrated_draw(const BenchmarkTask& task, const Split& sp) {
    DrawResult r;
    const auto train_s = gather(task.scores, sp.train), train_t = gather(task.truth, sp.train);
    const auto test_s = gather(task.scores, sp.test), test_t = gather(task.truth, sp.test);
    if (task.kind == TaskKind::Binary) {
        const auto train_l = to_labels(train_t), test_l = to_labels(test_t);
        record(r, "roc_auc", "", test_s.size(), [&] { return roc_auc(test_s, test_l); });
        const double t = best_threshold(train_s, train_l).threshold;
        std::vector<int> pred;
        for (double v : test_s) pred.push_back(v >= t ? 1 : 0);
        class_metrics(r, pred, test_l, 2);
        return r;
    }
    const auto map = an::fit_quantile_map(train_s, train_t, task.quantiles);
    if (map.k_reduced) r.notes.push_back("quantiles reduced to " + std::to_string(map.k));
    const auto pred = an::apply_quantile_map(map, test_s);
    record(r, "spearman", "", test_s.size(), [&] { return spearman(test_s, test_t); });
    continuous_value_metrics(r, pred, test_t, task.unit);
    const auto truth_edges = an::quantile_edges(train_t, map.k);
    std::vector<int> pc, tc;
    for (std::size_t i = 0; i < test_s.size(); ++i) {
        pc.push_back(static_cast<int>(an::quantile_bin(map.score_edges, test_s[i])));
        tc.push_back(static_cast<int>(an::quantile_bin(truth_edges, test_t[i])));
    }
    class_metrics(r, pc, tc, map.k);
    return r;
}

DrawResult knn_draw(const BenchmarkTask& task, const Split& sp) {
    DrawResult r;
    const auto train_f = gather_rows(task.features, task.dim, sp.train);
    const auto train_t = gather(task.truth, sp.train), test_t = gather(task.truth, sp.test);
    if (task.kind == TaskKind::Binary) {
        const auto model = an::knn_fit(train_f, task.dim, train_t, task.knn_k, an::KnnTask::Classification, 2);
        if (model.k_clamped) r.notes.push_back("k clamped to " + std::to_string(model.k));
        std::vector<double> p1;
        std::vector<int> pred;
        for (auto i : sp.test) {
            const auto p = an::knn_predict_proba(
                model, std::span<const float>(task.features.data() + i * task.dim, task.dim));
            p1.push_back(p[1]);
            pred.push_back(p[1] > p[0] ? 1 : 0);
        }
        const auto test_l = to_labels(test_t);
        record(r, "roc_auc", "", p1.size(), [&] { return roc_auc(p1, test_l); });
        class_metrics(r, pred, test_l, 2);
        return r;
    }
    const auto classes = an::quantile_classes(train_t, task.quantiles);
    std::vector<double> labels(classes.labels.begin(), classes.labels.end());
    const auto model = an::knn_fit(train_f, task.dim, labels, task.knn_k, an::KnnTask::Classification,
                                   task.quantiles);
    if (model.k_clamped) r.notes.push_back("k clamped to " + std::to_string(model.k));
    std::vector<double> pred;
    std::vector<int> pc, tc;
    for (auto i : sp.test) {
        const auto p = an::knn_predict_proba(model,
                                             std::span<const float>(task.features.data() + i * task.dim, task.dim));
        pred.push_back(an::bin_expectation(p, classes.means));
        pc.push_back(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
        tc.push_back(static_cast<int>(an::quantile_bin(classes.edges, task.truth[i])));
    }
    record(r, "spearman", "", pred.size(), [&] { return spearman(pred, test_t); });
    continuous_value_metrics(r, pred, test_t, task.unit);
    class_metrics(r, pc, tc, task.quantiles);
    return r;
}

void merge_draws(TaskReport& report, const std::vector<DrawResult>& draws) {
    std::map<std::string, double> sums;
    for (const auto& d : draws) {
        for (const auto& [name, m] : d.metrics) {
            auto& out = report.metrics[name];
            out.unit = m.unit;
            if (m.value) {
                sums[name] += *m.value;
                ++out.draws;
                out.count += m.count;
            } else if (out.error.empty()) {
                out.error = m.error;
            }
        }
        if (!d.confusion.empty()) {
            if (report.confusion.empty()) {
                report.confusion = d.confusion;
            } else if (report.confusion.size() == d.confusion.size()) {
                for (std::size_t i = 0; i < d.confusion.size(); ++i) {
                    for (std::size_t j = 0; j < d.confusion.size(); ++j) report.confusion[i][j] += d.confusion[i][j];
                }
            }
        }
        for (const auto& n : d.notes) {
            if (std::find(report.notes.begin(), report.notes.end(), n) == report.notes.end()) report.notes.push_back(n);
        }
    }
    for (auto& [name, m] : report.metrics) {
        if (m.draws > 0) m.value = sums[name] / static_cast<double>(m.draws);
    }
    report.classes = report.confusion.size();
}

}  // namespace

TaskReport run_task(const BenchmarkTask& task, const SplitSpec& split) {
    TaskReport report;
    report.name = task.name;
    report.kind = task.kind;
    report.mode = task.mode;
    report.samples = task.size();
    try {
        task.validate();
        std::vector<DrawResult> draws;
        if (task.mode == BenchmarkMode::ZeroShot) {
            draws.push_back(zero_shot(task));
        } else {
            split.validate();
            draws.resize(split.draws);
            const SeededRng base(split.seed, "benchmark/" + task.name);
            parallel_for(split.draws, [&](std::size_t d) {
                const auto sp = draw_split(task.size(), split, base.derive("draw" + std::to_string(d)));
                draws[d] = task.mode == BenchmarkMode::Knn ? knn_draw(task, sp) : calibrated_draw(task, sp);
            });
        }
        merge_draws(report, draws);
    } catch (const Error& e) {
        report.error = std::string(error_code_name(e.code())) + ": " + e.what();
    }
    return report;
}

MetricReport run_benchmark(const std::vector<BenchmarkTask>& tasks, const SplitSpec& split) {
    split.validate();
    MetricReport report;
    report.split = split;
    for (const auto& t : tasks) report.tasks.push_back(run_task(t, split));
    return report;
}

std::string report_to_json(const MetricReport& report) {
    using json = nlohmann::json;
    json tasks = json::array();
    for (const auto& t : report.tasks) {
        json metrics = json::object();
        for (const auto& [name, m] : t.metrics) {
            json jm{{"unit", m.unit}, {"count", m.count}, {"draws", m.draws}};
            jm["value"] = m.value ? json(*m.value) : json(nullptr);
            if (!m.error.empty()) jm["error"] = m.error;
            metrics[name] = jm;
        }
        json jt{{"name", t.name},       {"kind", kind_name(t.kind)}, {"mode", mode_name(t.mode)},
                {"samples", t.samples}, {"classes", t.classes},      {"metrics", metrics},
                {"confusion", t.confusion}, {"notes", t.notes}};
        if (!t.error.empty()) jt["error"] = t.error;
        tasks.push_back(jt);
    }
    json doc{{"split",
              {{"train_fraction", report.split.train_fraction},
               {"draws", report.split.draws},
               {"seed", report.split.seed},
               {"validation_point_cap", report.split.validation_point_cap}}},
             {"tasks", tasks}};
    return doc.dump(2) + "\n";
}

std::string report_to_table(const MetricReport& report) {
    const std::vector<std::pair<std::string, std::string>> columns = {
        {"spearman", "Spearman"}, {"roc_auc", "ROC-AUC"}, {"max_accuracy", "Max Acc"}, {"accuracy", "Acc"},
        {"f1", "F1"},             {"mae", "MAE"},         {"mape", "MAPE [%]"},        {"rmse", "RMSE"}};
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header = {"Task", "Mode", "n"};
    for (const auto& c : columns) header.push_back(c.second);
    rows.push_back(header);
    for (const auto& t : report.tasks) {
        std::vector<std::string> row = {t.name, mode_name(t.mode), std::to_string(t.samples)};
        for (const auto& c : columns) {
            const auto it = t.metrics.find(c.first);
            if (it == t.metrics.end()) {
                row.emplace_back("");
            } else if (!it->second.value) {
                row.emplace_back("n/a");
            } else {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.3f", *it->second.value);
                row.emplace_back(buf);
            }
        }
        if (!t.error.empty()) row[1] += " (failed)";
        rows.push_back(row);
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    std::string out;
    for (std::size_t ri = 0; ri < rows.size(); ++ri) {
        std::string line;
        for (std::size_t i = 0; i < rows[ri].size(); ++i) {
            const auto& cell = rows[ri][i];
            const std::string pad(width[i] - cell.size(), ' ');
            // Text columns left aligned, numbers right aligned.
            line += i < 2 ? cell + pad : pad + cell;
            if (i + 1 < rows[ri].size()) line += "  ";
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + "\n";
        if (ri == 0) out += std::string(line.size(), '-') + "\n";
    }
    return out;
}

}  // namespace urbanfield::eval
