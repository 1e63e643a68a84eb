#pragma once

#include <span>
#include <vector>

namespace urbanfield::analytics {

enum class KnnTask { Regression, Classification };

// Unweighted brute-force k-nearest-neighbours over Euclidean distance.
struct KnnModel {
    std::size_t k = 5;
    std::size_t dim = 0;
    KnnTask task = KnnTask::Regression;
    std::size_t classes = 0;      // classification only
    bool k_clamped = false;       // requested k exceeded the training size
    std::vector<float> features;  // row-major, n x dim
    std::vector<double> labels;   // class ids stored as doubles for classification

    std::size_t size() const { return labels.size(); }
};

KnnModel knn_fit(std::span<const float> features, std::size_t dim, std::span<const double> labels,
                 std::size_t k, KnnTask task, std::size_t classes = 0);

// Indices of the k nearest training rows; distance ties go to the lower index.
std::vector<std::size_t> knn_neighbors(const KnnModel& model, std::span<const float> query);

double knn_predict_value(const KnnModel& model, std::span<const float> query);
// Empirical class frequencies among the k nearest rows.
std::vector<double> knn_predict_proba(const KnnModel& model, std::span<const float> query);

}  // namespace urbanfield::analytics
