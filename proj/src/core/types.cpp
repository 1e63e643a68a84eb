#include "core/types.hpp"

#include <algorithm>
#include <string>

namespace urbanfield {

PointCloud::PointCloud(std::vector<Vec3f> positions) : positions_(std::move(positions)) {
    for (std::size_t i = 0; i < positions_.size(); ++i) {
        if (!positions_[i].to_double().finite()) {
            invalid_argument("point " + std::to_string(i) + " has a non-finite coordinate");
        }
    }
}

Bounds2 PointCloud::bounds_xy() const {
    Bounds2 b{{0, 0}, {0, 0}};
    if (positions_.empty()) return b;
    b.min = b.max = {positions_[0].x, positions_[0].y};
    for (const auto& p : positions_) {
        b.min.x = std::min<double>(b.min.x, p.x);
        b.min.y = std::min<double>(b.min.y, p.y);
        b.max.x = std::max<double>(b.max.x, p.x);
        b.max.y = std::max<double>(b.max.y, p.y);
    }
    return b;
}

void TriangleMesh::validate() const {
    const auto n = vertices.size();
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        const auto& tri = triangles[t];
        if (tri.a >= n || tri.b >= n || tri.c >= n) {
            invalid_argument("triangle " + std::to_string(t) + " references a missing vertex");
        }
    }
    if (!vertex_colors.empty() && vertex_colors.size() != n) {
        invalid_argument("vertex color count does not match vertex count");
    }
}

FeatureStore::FeatureStore(PointCloud points, std::size_t levels, std::size_t dim)
    : points_(std::move(points)), levels_(levels), dim_(dim) {
    if (levels == 0 || levels > 255) invalid_argument("level count must be in [1, 255]");
    if (dim == 0 || dim > 65535) invalid_argument("dimension must be in [1, 65535]");
    features_.assign(levels_ * points_.size() * dim_, 0.0f);
    obs_count_.assign(levels_ * points_.size(), 0u);
}

void FeatureStore::validate() const {
    for (std::size_t l = 0; l < levels_; ++l) {
        for (std::size_t p = 0; p < size(); ++p) {
            auto f = feature(l, p);
            bool all_zero = true;
            for (float v : f) {
                if (!std::isfinite(v)) {
                    invalid_argument("non-finite feature at level " + std::to_string(l) +
                                     ", point " + std::to_string(p));
                }
                all_zero = all_zero && v == 0.0f;
            }
            if ((obs_count(l, p) == 0) != all_zero) {
                invalid_argument("observation count and feature disagree at level " +
                                 std::to_string(l) + ", point " + std::to_string(p));
            }
        }
    }
}

std::size_t ScoreField::observed_count() const {
    return static_cast<std::size_t>(std::count(observed.begin(), observed.end(), std::uint8_t{1}));
}

}  // namespace urbanfield
