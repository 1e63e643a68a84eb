#pragma once

#include <span>
#include <vector>

namespace urbanfield::analytics {

// Linear interpolation between order statistics: h = (n-1)p,
// q = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]). `sorted` ascending.
double quantile_type7(std::span<const double> sorted, double p);

// k+1 type-7 edges at p = i/k.
std::vector<double> quantile_edges(std::span<const double> values, std::size_t k);

// Bin of x: the first i with x <= edges[i+1] (right-inclusive); values below
// edges[0] go to bin 0 and above edges[k] to bin k-1.
std::size_t quantile_bin(std::span<const double> edges, double x);

struct QuantileMap {
    std::size_t k = 5;
    std::vector<double> score_edges;   // k+1 ascending
    std::vector<double> target_means;  // k
    bool k_reduced = false;            // fewer distinct scores than requested bins
};

// Bins scores and ground truth into k quantile bins each; bin i of the scores
// maps to the mean of the ground truth in its bin i. An empty ground-truth bin
// (heavy ties) takes the midpoint of its edges.
QuantileMap fit_quantile_map(std::span<const double> scores, std::span<const double> gt,
                             std::size_t k = 5);
double apply_quantile_map(const QuantileMap& map, double score);
std::vector<double> apply_quantile_map(const QuantileMap& map, std::span<const double> scores);

// Ground truth discretised into k quantile classes, with per-class means.
struct QuantileClasses {
    std::vector<double> edges;
    std::vector<int> labels;
    std::vector<double> means;
};
QuantileClasses quantile_classes(std::span<const double> values, std::size_t k);

// sum_i probs[i] * bin_means[i]; probs must be non-negative and sum to 1 +- 1e-6.
double bin_expectation(std::span<const double> probs, std::span<const double> bin_means);

}  // namespace urbanfield::analytics
