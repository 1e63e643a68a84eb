#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "core/image.hpp"
#include "core/rng.hpp"
#include "core/types.hpp"
#include "view/camera.hpp"

namespace urbanfield::view {

inline constexpr float kNoHit = std::numeric_limits<float>::infinity();

// Distance along each pixel's center ray to the nearest surface; non-finite = no hit.
struct DepthImage {
    int width = 0;
    int height = 0;
    std::vector<float> depth;

    DepthImage() = default;
    DepthImage(int w, int h) : width(w), height(h), depth(static_cast<std::size_t>(w) * h, kNoHit) {}

    float at(int x, int y) const { return depth[static_cast<std::size_t>(y) * width + x]; }
    float& at(int x, int y) { return depth[static_cast<std::size_t>(y) * width + x]; }
    static bool hit(float d) { return std::isfinite(d); }
    double no_hit_fraction() const;
    // Smallest finite depth, or nullopt when nothing was hit.
    std::optional<float> min_depth() const;
};

struct RenderedView {
    std::int64_t id = 0;
    CameraPose pose;
    CameraIntrinsics intrinsics;
    DepthImage depth;
    std::optional<RgbImage> color;
    // Index of the nearest triangle per pixel (-1 = none); filled on request only.
    std::vector<std::int32_t> triangle_id;

    Camera camera() const { return Camera(pose, intrinsics); }
    void validate() const;
};

struct ViewSampleConfig {
    double grid_spacing = 40.0;
    double xy_jitter = 10.0;
    double height_min = 15.0;
    double height_max = 100.0;
    double min_closest_depth = 50.0;
    double max_infinite_fraction = 0.2;

    void validate() const;
};

std::vector<CameraPose> sample_camera_poses(const ViewSampleConfig& config, const Bounds2& bounds,
                                            SeededRng& rng);

struct RasterOptions {
    bool color = true;
    bool triangle_ids = false;
    double near_plane = 0.05;
};

// Z-buffer rasterization with perspective-correct interpolation; no back-face culling.
RenderedView rasterize(const TriangleMesh& mesh, const CameraPose& pose,
                       const CameraIntrinsics& intrinsics, const RasterOptions& options = {});

// Keeps views whose nearest hit is at least min_closest_depth away and whose
// no-hit fraction is at most max_infinite_fraction. Order preserved.
std::vector<RenderedView> filter_views(std::vector<RenderedView> views,
                                       const ViewSampleConfig& config);
bool keep_view(const DepthImage& depth, const ViewSampleConfig& config);

}  // namespace urbanfield::view
