#include "view/camera.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace urbanfield::view {

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
}

CameraIntrinsics CameraIntrinsics::from_fov(int width, int height, double horizontal_fov_deg) {
    if (!(horizontal_fov_deg > 0.0 && horizontal_fov_deg < 180.0)) {
        invalid_argument("field of view must be in (0, 180) degrees");
    }
    const double f = 0.5 * width / std::tan(0.5 * horizontal_fov_deg * kDeg);
    CameraIntrinsics k{width, height, f, f, 0.5 * width, 0.5 * height};
    k.validate();
    return k;
}

void CameraIntrinsics::validate() const {
    if (width < 8 || height < 8) invalid_argument("image must be at least 8x8 pixels");
    if (!(fx > 0.0) || !(fy > 0.0)) invalid_argument("focal lengths must be positive");
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
        invalid_argument("principal point must lie inside the image");
    }
}

void CameraPose::validate() const {
    if (!position.finite()) invalid_argument("camera position must be finite");
    if (!(pitch_down >= 0.0 && pitch_down <= 90.0)) {
        invalid_argument("pitch_down must be in [0, 90] degrees, got " + std::to_string(pitch_down));
    }
    if (!(yaw >= 0.0 && yaw < 360.0)) invalid_argument("yaw must be in [0, 360) degrees");
}

Camera::Camera(const CameraPose& pose, const CameraIntrinsics& intrinsics)
    : center_(pose.position), k_(intrinsics) {
    const double y = pose.yaw * kDeg;
    const double p = pose.pitch_down * kDeg;
    forward_ = {std::cos(p) * std::cos(y), std::cos(p) * std::sin(y), -std::sin(p)};
    right_ = {std::sin(y), -std::cos(y), 0.0};
    down_ = forward_.cross(right_);
}

Vec3 Camera::to_camera(const Vec3& world) const {
    const Vec3 d = world - center_;
    return {d.dot(right_), d.dot(down_), d.dot(forward_)};
}

std::optional<Projection> Camera::project(const Vec3& world, double near) const {
    const Vec3 c = to_camera(world);
    if (!(c.z > near)) return std::nullopt;
    Projection pr;
    pr.u = k_.fx * c.x / c.z + k_.cx;
    pr.v = k_.fy * c.y / c.z + k_.cy;
    if (!(pr.u >= 0.0 && pr.u < k_.width && pr.v >= 0.0 && pr.v < k_.height)) return std::nullopt;
    pr.px = static_cast<int>(std::floor(pr.u));
    pr.py = static_cast<int>(std::floor(pr.v));
    // Guard against u rounding up to width for values just below it.
    if (pr.px >= k_.width || pr.py >= k_.height) return std::nullopt;
    pr.z = c.z;
    pr.range = c.norm();
    return pr;
}

double Camera::pixel_ray_scale(int px, int py) const {
    const double x = (px + 0.5 - k_.cx) / k_.fx;
    const double y = (py + 0.5 - k_.cy) / k_.fy;
    return std::sqrt(x * x + y * y + 1.0);
}

Vec3 Camera::pixel_ray(int px, int py) const {
    const double x = (px + 0.5 - k_.cx) / k_.fx;
    const double y = (py + 0.5 - k_.cy) / k_.fy;
    const Vec3 d = right_ * x + down_ * y + forward_;
    return d * (1.0 / d.norm());
}

}  // namespace urbanfield::view
