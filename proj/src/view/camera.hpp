#pragma once

#include <optional>

#include "core/types.hpp"

namespace urbanfield::view {

struct CameraIntrinsics {
    int width = 512;
    int height = 512;
    double fx = 256.0;
    double fy = 256.0;
    double cx = 256.0;
    double cy = 256.0;

    // Square pixels, principal point at the image center.
    static CameraIntrinsics from_fov(int width, int height, double horizontal_fov_deg);
    void validate() const;
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

// yaw: degrees counterclockwise from +x (east), in [0, 360).
// pitch_down: degrees below the horizon, 0 = horizontal, 90 = straight down.
struct CameraPose {
    Vec3 position;
    double yaw = 0.0;
    double pitch_down = 0.0;

    void validate() const;
};

struct Projection {
    double u = 0.0;  // continuous image coordinates; pixel (i, j) covers [i, i+1) x [j, j+1)
    double v = 0.0;
    int px = 0;
    int py = 0;
    double z = 0.0;      // along the optical axis
    double range = 0.0;  // Euclidean distance from the camera center
};

// Pinhole camera with X right, Y down, Z forward.
class Camera {
public:
    Camera(const CameraPose& pose, const CameraIntrinsics& intrinsics);

    Vec3 to_camera(const Vec3& world) const;
    // Empty when the point is behind the near plane or outside the image.
    std::optional<Projection> project(const Vec3& world, double near = 1e-6) const;
    // Unit world-space ray through the pixel center.
    Vec3 pixel_ray(int px, int py) const;
    // Length of the camera-space ray (x', y', 1) through the pixel center.
    double pixel_ray_scale(int px, int py) const;

    const Vec3& center() const { return center_; }
    const CameraIntrinsics& intrinsics() const { return k_; }

private:
    Vec3 center_;
    Vec3 right_;
    Vec3 down_;
    Vec3 forward_;
    CameraIntrinsics k_;
};

}  // namespace urbanfield::view
