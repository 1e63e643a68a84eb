#pragma once

#include <cstddef>
#include <vector>

#include "core/rng.hpp"
#include "core/types.hpp"

namespace urbanfield {

struct Downsampled {
    PointCloud cloud;
    std::vector<std::size_t> source_index;  // source_index[i] = original index of output i
};

// Uniform random subset of `target` points, kept in original order.
// Identity when the cloud already has at most `target` points.
Downsampled downsample_points(const PointCloud& cloud, std::size_t target, SeededRng& rng);

// Same selection rule over bare indices [0, n).
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t target, SeededRng& rng);

}  // namespace urbanfield
