#include <cmath>

#include "view/views.hpp"

namespace urbanfield::view {

void ViewSampleConfig::validate() const {
    if (!(grid_spacing > 0.0)) invalid_argument("grid_spacing must be positive");
    if (!(xy_jitter >= 0.0)) invalid_argument("xy_jitter must be non-negative");
    if (!(height_min > 0.0) || !(height_min <= height_max)) {
        invalid_argument("heights must satisfy 0 < height_min <= height_max");
    }
    if (!(min_closest_depth > 0.0)) invalid_argument("min_closest_depth must be positive");
    if (!(max_infinite_fraction >= 0.0 && max_infinite_fraction <= 1.0)) {
        invalid_argument("max_infinite_fraction must be in [0, 1]");
    }
}

std::vector<CameraPose> sample_camera_poses(const ViewSampleConfig& config, const Bounds2& bounds,
                                            SeededRng& rng) {
    config.validate();
    if (bounds.empty()) invalid_argument("scene bounds are empty");
    const auto nx = static_cast<std::size_t>(std::ceil(bounds.width() / config.grid_spacing));
    const auto ny = static_cast<std::size_t>(std::ceil(bounds.height() / config.grid_spacing));
    std::vector<CameraPose> poses;
    poses.reserve(nx * ny);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            CameraPose pose;
            const double cx = bounds.min.x + (static_cast<double>(i) + 0.5) * config.grid_spacing;
            const double cy = bounds.min.y + (static_cast<double>(j) + 0.5) * config.grid_spacing;
            pose.position.x = cx + rng.uniform(-config.xy_jitter, config.xy_jitter);
            pose.position.y = cy + rng.uniform(-config.xy_jitter, config.xy_jitter);
            pose.position.z = rng.uniform(config.height_min, config.height_max);
            pose.yaw = rng.uniform(0.0, 360.0);
            pose.pitch_down = rng.uniform(0.0, 90.0);
            poses.push_back(pose);
        }
    }
    return poses;
}

double DepthImage::no_hit_fraction() const {
    if (depth.empty()) return 1.0;
    std::size_t miss = 0;
    for (float d : depth) miss += hit(d) ? 0 : 1;
    return static_cast<double>(miss) / static_cast<double>(depth.size());
}

std::optional<float> DepthImage::min_depth() const {
    std::optional<float> best;
    for (float d : depth) {
        if (hit(d) && (!best || d < *best)) best = d;
    }
    return best;
}

bool keep_view(const DepthImage& depth, const ViewSampleConfig& config) {
    if (depth.no_hit_fraction() > config.max_infinite_fraction) return false;
    const auto nearest = depth.min_depth();
    return !nearest || *nearest >= config.min_closest_depth;
}

std::vector<RenderedView> filter_views(std::vector<RenderedView> views,
                                       const ViewSampleConfig& config) {
    std::vector<RenderedView> kept;
    kept.reserve(views.size());
    for (auto& v : views) {
        if (keep_view(v.depth, config)) kept.push_back(std::move(v));
    }
    return kept;
}

void RenderedView::validate() const {
    pose.validate();
    intrinsics.validate();
    if (depth.width != intrinsics.width || depth.height != intrinsics.height ||
        depth.depth.size() != intrinsics.pixel_count()) {
        invalid_argument("view " + std::to_string(id) + ": depth size does not match intrinsics");
    }
    if (color && (color->width != intrinsics.width || color->height != intrinsics.height)) {
        invalid_argument("view " + std::to_string(id) + ": color size does not match intrinsics");
    }
    for (float d : depth.depth) {
        if (DepthImage::hit(d) && !(d > 0.0f)) {
            invalid_argument("view " + std::to_string(id) + ": non-positive depth");
        }
    }
}

}  // namespace urbanfield::view
