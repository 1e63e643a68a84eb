#include "analytics/knn.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "core/errors.hpp"

namespace urbanfield::analytics {

KnnModel knn_fit(std::span<const float> features, std::size_t dim, std::span<const double> labels,
                 std::size_t k, KnnTask task, std::size_t classes) {
    if (dim == 0) invalid_argument("feature dimension must be positive");
    if (labels.empty()) invalid_argument("KNN needs at least one training row");
    if (features.size() != labels.size() * dim) invalid_argument("features and labels differ in length");
    if (k == 0) invalid_argument("k must be at least 1");
    KnnModel m;
    m.dim = dim;
    m.task = task;
    m.k = k;
    if (k > labels.size()) {
        m.k = labels.size();
        m.k_clamped = true;
    }
    m.features.assign(features.begin(), features.end());
    m.labels.assign(labels.begin(), labels.end());
    if (task == KnnTask::Classification) {
        std::size_t max_label = 0;
        for (double l : labels) {
            if (!(l >= 0.0) || l != std::floor(l)) invalid_argument("class labels must be non-negative integers");
            max_label = std::max(max_label, static_cast<std::size_t>(l));
        }
        m.classes = std::max(classes, max_label + 1);
    }
    return m;
}

std::vector<std::size_t> knn_neighbors(const KnnModel& model, std::span<const float> query) {
    if (query.size() != model.dim) invalid_argument("query dimension does not match the model");
    std::vector<std::pair<double, std::size_t>> dist(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) {
        const float* row = model.features.data() + i * model.dim;
        double d2 = 0.0;
        for (std::size_t j = 0; j < model.dim; ++j) {
            const double d = static_cast<double>(row[j]) - query[j];
            d2 += d * d;
        }
        dist[i] = {d2, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(model.k), dist.end());
    std::vector<std::size_t> out(model.k);
    for (std::size_t i = 0; i < model.k; ++i) out[i] = dist[i].second;
    return out;
}

double knn_predict_value(const KnnModel& model, std::span<const float> query) {
    double sum = 0.0;
    for (auto i : knn_neighbors(model, query)) sum += model.labels[i];
    return sum / static_cast<double>(model.k);
}

std::vector<double> knn_predict_proba(const KnnModel& model, std::span<const float> query) {
    if (model.task != KnnTask::Classification) invalid_argument("model is not a classifier");
    std::vector<double> p(model.classes, 0.0);
    for (auto i : knn_neighbors(model, query)) p[static_cast<std::size_t>(model.labels[i])] += 1.0;
    for (auto& v : p) v /= static_cast<double>(model.k);
    return p;
}

}  // namespace urbanfield::analytics
