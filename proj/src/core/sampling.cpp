#include "core/sampling.hpp"

#include <numeric>

namespace urbanfield {

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t target, SeededRng& rng) {
    if (target == 0) invalid_argument("downsample target must be at least 1");
    std::vector<std::size_t> out;
    if (n <= target) {
        out.resize(n);
        std::iota(out.begin(), out.end(), std::size_t{0});
        return out;
    }
    // Selection sampling: every size-`target` subset is equally likely.
    out.reserve(target);
    std::size_t needed = target;
    for (std::size_t i = 0; i < n && needed > 0; ++i) {
        const double remaining = static_cast<double>(n - i);
        if (rng.uniform() * remaining < static_cast<double>(needed)) {
            out.push_back(i);
            --needed;
        }
    }
    return out;
}

Downsampled downsample_points(const PointCloud& cloud, std::size_t target, SeededRng& rng) {
    auto idx = sample_indices(cloud.size(), target, rng);
    if (idx.size() == cloud.size()) return {cloud, std::move(idx)};
    std::vector<Vec3f> pts;
    pts.reserve(idx.size());
    for (auto i : idx) pts.push_back(cloud[i]);
    return {PointCloud(std::move(pts)), std::move(idx)};
}

}  // namespace urbanfield
