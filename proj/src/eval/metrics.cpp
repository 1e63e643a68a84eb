#include "eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "core/errors.hpp"

namespace urbanfield::eval {

namespace {

void check_aligned(std::size_t a, std::size_t b) {
    if (a != b) invalid_argument("inputs differ in length");
    if (a == 0) invalid_argument("metric of an empty sample");
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const int> labels) {
    std::size_t pos = 0, neg = 0;
    for (int l : labels) {
        if (l == 1) {
            ++pos;
        } else if (l == 0) {
            ++neg;
        } else {
            invalid_argument("binary labels must be 0 or 1");
        }
    }
    if (pos == 0 || neg == 0) fail(ErrorCode::UndefinedMetric, "only one class present");
    return {pos, neg};
}

void check_finite(std::span<const double> v) {
    for (double x : v) {
        if (std::isnan(x)) invalid_argument("NaN in metric input");
    }
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] == values[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + 1 + j);  // mean of positions i+1..j
        for (std::size_t t = i; t < j; ++t) ranks[order[t]] = r;
        i = j;
    }
    return ranks;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    check_aligned(scores.size(), labels.size());
    check_finite(scores);
    const auto [pos, neg] = class_counts(labels);
    const auto ranks = average_ranks(scores);
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        if (labels[i] == 1) rank_sum += ranks[i];
    }
    const double p = static_cast<double>(pos), q = static_cast<double>(neg);
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

ThresholdResult best_threshold(std::span<const double> scores, std::span<const int> labels) {
    check_aligned(scores.size(), labels.size());
    check_finite(scores);
    const auto [pos, neg] = class_counts(labels);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    // Threshold +inf: everything negative.
    std::size_t correct = neg;
    ThresholdResult best{static_cast<double>(correct) / static_cast<double>(scores.size()),
                         std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < order.size();) {
        const double t = scores[order[i]];
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == t) {
            if (labels[order[j]] == 1) {
                ++correct;
            } else {
                --correct;
            }
            ++j;
        }
        const double acc = static_cast<double>(correct) / static_cast<double>(scores.size());
        if (acc > best.accuracy) best = {acc, t};
        i = j;
    }
    (void)pos;
    return best;
}

double max_accuracy(std::span<const double> scores, std::span<const int> labels) {
    return best_threshold(scores, labels).accuracy;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    check_aligned(a.size(), b.size());
    if (a.size() < 2) fail(ErrorCode::UndefinedMetric, "correlation needs at least two samples");
    check_finite(a);
    check_finite(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) fail(ErrorCode::UndefinedMetric, "correlation of a constant input");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double spearman(std::span<const double> a, std::span<const double> b) {
    check_aligned(a.size(), b.size());
    check_finite(a);
    check_finite(b);
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    return pearson(ra, rb);
}

std::vector<std::vector<std::size_t>> confusion(std::span<const int> pred, std::span<const int> truth,
                                                std::size_t k) {
    check_aligned(pred.size(), truth.size());
    std::vector<std::vector<std::size_t>> m(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] < 0 || truth[i] < 0 || static_cast<std::size_t>(pred[i]) >= k ||
            static_cast<std::size_t>(truth[i]) >= k) {
            invalid_argument("class label out of range");
        }
        ++m[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])];
    }
    return m;
}

namespace {

double class_f1(const std::vector<std::vector<std::size_t>>& m, std::size_t c) {
    std::size_t tp = m[c][c], fp = 0, fn = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i == c) continue;
        fp += m[i][c];
        fn += m[c][i];
    }
    if (tp == 0) return 0.0;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double f1_binary(std::span<const int> pred, std::span<const int> truth) {
    return class_f1(confusion(pred, truth, 2), 1);
}

double f1_macro(std::span<const int> pred, std::span<const int> truth, std::size_t k) {
    if (k == 0) invalid_argument("need at least one class");
    const auto m = confusion(pred, truth, k);
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) sum += class_f1(m, c);
    return sum / static_cast<double>(k);
}

double accuracy(std::span<const int> pred, std::span<const int> truth) {
    check_aligned(pred.size(), truth.size());
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == truth[i];
    return static_cast<double>(hit) / static_cast<double>(pred.size());
}

double mae(std::span<const double> pred, std::span<const double> truth) {
    check_aligned(pred.size(), truth.size());
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
    return s / static_cast<double>(pred.size());
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
    check_aligned(pred.size(), truth.size());
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(pred.size()));
}

MapeResult mape(std::span<const double> pred, std::span<const double> truth) {
    check_aligned(pred.size(), truth.size());
    MapeResult r;
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (truth[i] == 0.0) {
            ++r.excluded;
            continue;
        }
        s += std::abs((pred[i] - truth[i]) / truth[i]);
        ++r.used;
    }
    if (r.used == 0) fail(ErrorCode::UndefinedMetric, "MAPE undefined: every truth value is zero");
    r.percent = 100.0 * s / static_cast<double>(r.used);
    return r;
}

}  // namespace urbanfield::eval
