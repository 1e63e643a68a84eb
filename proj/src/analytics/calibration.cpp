#include "analytics/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace urbanfield::analytics {

double quantile_type7(std::span<const double> sorted, double p) {
    if (sorted.empty()) invalid_argument("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) invalid_argument("quantile level must be in [0, 1]");
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

std::vector<double> quantile_edges(std::span<const double> values, std::size_t k) {
    if (k == 0) invalid_argument("need at least one quantile bin");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges(k + 1);
    for (std::size_t i = 0; i <= k; ++i) {
        edges[i] = quantile_type7(sorted, static_cast<double>(i) / static_cast<double>(k));
    }
    return edges;
}

std::size_t quantile_bin(std::span<const double> edges, double x) {
    const std::size_t k = edges.size() - 1;
    for (std::size_t i = 0; i < k; ++i) {
        if (x <= edges[i + 1]) return i;
    }
    return k - 1;
}

QuantileMap fit_quantile_map(std::span<const double> scores, std::span<const double> gt, std::size_t k) {
    if (k == 0) invalid_argument("need at least one quantile bin");
    if (scores.empty() || gt.empty()) invalid_argument("quantile calibration needs scores and ground truth");
    for (double v : scores) {
        if (!std::isfinite(v)) invalid_argument("non-finite score");
    }
    for (double v : gt) {
        if (!std::isfinite(v)) invalid_argument("non-finite ground truth");
    }
    std::vector<double> distinct(scores.begin(), scores.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    QuantileMap map;
    map.k = k;
    if (distinct.size() < k) {
        map.k = distinct.size();
        map.k_reduced = true;
    }
    map.score_edges = quantile_edges(scores, map.k);
    const auto gt_edges = quantile_edges(gt, map.k);
    std::vector<double> sum(map.k, 0.0);
    std::vector<std::size_t> count(map.k, 0);
    for (double v : gt) {
        const auto b = quantile_bin(gt_edges, v);
        sum[b] += v;
        ++count[b];
    }
    map.target_means.resize(map.k);
    for (std::size_t i = 0; i < map.k; ++i) {
        map.target_means[i] = count[i] > 0 ? sum[i] / static_cast<double>(count[i])
                                           : 0.5 * (gt_edges[i] + gt_edges[i + 1]);
    }
    return map;
}

double apply_quantile_map(const QuantileMap& map, double score) {
    return map.target_means[quantile_bin(map.score_edges, score)];
}

std::vector<double> apply_quantile_map(const QuantileMap& map, std::span<const double> scores) {
    std::vector<double> out;
    out.reserve(scores.size());
    for (double s : scores) out.push_back(apply_quantile_map(map, s));
    return out;
}

QuantileClasses quantile_classes(std::span<const double> values, std::size_t k) {
    QuantileClasses qc;
    qc.edges = quantile_edges(values, k);
    std::vector<double> sum(k, 0.0);
    std::vector<std::size_t> count(k, 0);
    qc.labels.reserve(values.size());
    for (double v : values) {
        const auto b = quantile_bin(qc.edges, v);
        qc.labels.push_back(static_cast<int>(b));
        sum[b] += v;
        ++count[b];
    }
    qc.means.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        qc.means[i] = count[i] > 0 ? sum[i] / static_cast<double>(count[i])
                                   : 0.5 * (qc.edges[i] + qc.edges[i + 1]);
    }
    return qc;
}

double bin_expectation(std::span<const double> probs, std::span<const double> bin_means) {
    if (probs.size() != bin_means.size() || probs.empty()) {
        invalid_argument("probabilities and bin means differ in length");
    }
    double total = 0.0, value = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (!(probs[i] >= 0.0) || !std::isfinite(probs[i])) invalid_argument("probabilities must be non-negative");
        total += probs[i];
        value += probs[i] * bin_means[i];
    }
    if (std::abs(total - 1.0) > 1e-6) invalid_argument("probabilities must sum to 1");
    return value;
}

}  // namespace urbanfield::analytics
