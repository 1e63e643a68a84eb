#pragma once

#include <span>
#include <vector>

namespace urbanfield::eval {

// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// P(score+ > score-) + P(equal)/2 from rank sums. Throws UndefinedMetric
// unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// Best accuracy of the rule "score >= t predicts positive" over t in the
// distinct scores and +inf.
struct ThresholdResult {
    double accuracy = 0.0;
    double threshold = 0.0;
};
ThresholdResult best_threshold(std::span<const double> scores, std::span<const int> labels);
double max_accuracy(std::span<const double> scores, std::span<const int> labels);

// Throws UndefinedMetric for fewer than two samples or constant input.
double pearson(std::span<const double> a, std::span<const double> b);
double spearman(std::span<const double> a, std::span<const double> b);

// confusion[i][j] = count(truth == i, pred == j)
std::vector<std::vector<std::size_t>> confusion(std::span<const int> pred, std::span<const int> truth,
                                                std::size_t k);
// F1 of class 1; 0 when precision + recall is 0.
double f1_binary(std::span<const int> pred, std::span<const int> truth);
// Unweighted mean of per-class F1 over k classes.
double f1_macro(std::span<const int> pred, std::span<const int> truth, std::size_t k);
double accuracy(std::span<const int> pred, std::span<const int> truth);

double mae(std::span<const double> pred, std::span<const double> truth);
double rmse(std::span<const double> pred, std::span<const double> truth);

struct MapeResult {
    double percent = 0.0;
    std::size_t used = 0;
    std::size_t excluded = 0;  // samples with zero truth
};
// Throws UndefinedMetric when every truth value is zero.
MapeResult mape(std::span<const double> pred, std::span<const double> truth);

}  // namespace urbanfield::eval
