#include <algorithm>
#include <array>
#include <cmath>

#include "view/views.hpp"

namespace urbanfield::view {
namespace {

struct ClipVertex {
    Vec3 pos;  // camera space
    Rgb color;
};

ClipVertex lerp(const ClipVertex& a, const ClipVertex& b, double t) {
    const auto mix = [t](float x, float y) { return static_cast<float>(x + (y - x) * t); };
    return {a.pos + (b.pos - a.pos) * t,
            {mix(a.color.r, b.color.r), mix(a.color.g, b.color.g), mix(a.color.b, b.color.b)}};
}

// Sutherland-Hodgman against z >= near. Returns the vertex count (0, 3 or 4).
int clip_near(const std::array<ClipVertex, 3>& in, double near, std::array<ClipVertex, 4>& out) {
    int n = 0;
    for (int i = 0; i < 3; ++i) {
        const auto& a = in[i];
        const auto& b = in[(i + 1) % 3];
        const bool a_in = a.pos.z >= near;
        const bool b_in = b.pos.z >= near;
        if (a_in) out[n++] = a;
        if (a_in != b_in) out[n++] = lerp(a, b, (near - a.pos.z) / (b.pos.z - a.pos.z));
    }
    return n;
}

class Rasterizer {
public:
    Rasterizer(const CameraIntrinsics& k, RenderedView& view, bool want_color, bool want_ids)
        : k_(k), view_(view), want_color_(want_color), want_ids_(want_ids) {
        col_scale_.resize(k.width);
        row_scale_.resize(k.height);
        for (int x = 0; x < k.width; ++x) col_scale_[x] = (x + 0.5 - k.cx) / k.fx;
        for (int y = 0; y < k.height; ++y) row_scale_[y] = (y + 0.5 - k.cy) / k.fy;
        if (want_color_) shaded_.assign(k.pixel_count() * 3, 0.0f);
    }

    void draw(const ClipVertex& a, const ClipVertex& b, const ClipVertex& c, std::int32_t id) {
        const std::array<const ClipVertex*, 3> v{&a, &b, &c};
        double sx[3], sy[3], iz[3];
        for (int i = 0; i < 3; ++i) {
            iz[i] = 1.0 / v[i]->pos.z;
            sx[i] = k_.fx * v[i]->pos.x * iz[i] + k_.cx;
            sy[i] = k_.fy * v[i]->pos.y * iz[i] + k_.cy;
        }
        const double area = (sx[1] - sx[0]) * (sy[2] - sy[0]) - (sy[1] - sy[0]) * (sx[2] - sx[0]);
        if (!(std::abs(area) > 1e-12)) return;

        const double min_x = std::min({sx[0], sx[1], sx[2]});
        const double max_x = std::max({sx[0], sx[1], sx[2]});
        const double min_y = std::min({sy[0], sy[1], sy[2]});
        const double max_y = std::max({sy[0], sy[1], sy[2]});
        const int x0 = static_cast<int>(std::max(0.0, std::ceil(min_x - 0.5)));
        const int x1 = static_cast<int>(std::min<double>(k_.width - 1, std::floor(max_x - 0.5)));
        const int y0 = static_cast<int>(std::max(0.0, std::ceil(min_y - 0.5)));
        const int y1 = static_cast<int>(std::min<double>(k_.height - 1, std::floor(max_y - 0.5)));
        if (x0 > x1 || y0 > y1) return;

        const double inv_area = 1.0 / area;
        const bool positive = area > 0.0;
        for (int py = y0; py <= y1; ++py) {
            const double cy = py + 0.5;
            for (int px = x0; px <= x1; ++px) {
                const double cx = px + 0.5;
                double w0 = (sx[2] - sx[1]) * (cy - sy[1]) - (sy[2] - sy[1]) * (cx - sx[1]);
                double w1 = (sx[0] - sx[2]) * (cy - sy[2]) - (sy[0] - sy[2]) * (cx - sx[2]);
                double w2 = (sx[1] - sx[0]) * (cy - sy[0]) - (sy[1] - sy[0]) * (cx - sx[0]);
                if (positive ? (w0 < 0 || w1 < 0 || w2 < 0) : (w0 > 0 || w1 > 0 || w2 > 0)) {
                    continue;
                }
                w0 *= inv_area;
                w1 *= inv_area;
                w2 *= inv_area;
                const double inv_z = w0 * iz[0] + w1 * iz[1] + w2 * iz[2];
                if (!(inv_z > 0.0)) continue;
                const double z = 1.0 / inv_z;
                const double xs = col_scale_[px];
                const double ys = row_scale_[py];
                const double range = z * std::sqrt(xs * xs + ys * ys + 1.0);
                const std::size_t idx = static_cast<std::size_t>(py) * k_.width + px;
                if (!(range < view_.depth.depth[idx])) continue;
                view_.depth.depth[idx] = static_cast<float>(range);
                if (want_ids_) view_.triangle_id[idx] = id;
                if (want_color_) {
                    const double p0 = w0 * iz[0] * z, p1 = w1 * iz[1] * z, p2 = w2 * iz[2] * z;
                    shaded_[3 * idx] = static_cast<float>(p0 * a.color.r + p1 * b.color.r + p2 * c.color.r);
                    shaded_[3 * idx + 1] = static_cast<float>(p0 * a.color.g + p1 * b.color.g + p2 * c.color.g);
                    shaded_[3 * idx + 2] = static_cast<float>(p0 * a.color.b + p1 * b.color.b + p2 * c.color.b);
                }
            }
        }
    }

    void resolve_color() {
        if (!want_color_) return;
        RgbImage img(k_.width, k_.height);
        for (std::size_t i = 0; i < shaded_.size(); ++i) {
            const double v = std::clamp<double>(shaded_[i], 0.0, 1.0);
            img.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
        view_.color = std::move(img);
    }

private:
    const CameraIntrinsics& k_;
    RenderedView& view_;
    bool want_color_;
    bool want_ids_;
    std::vector<double> col_scale_;
    std::vector<double> row_scale_;
    std::vector<float> shaded_;
};

}  // namespace

RenderedView rasterize(const TriangleMesh& mesh, const CameraPose& pose,
                       const CameraIntrinsics& intrinsics, const RasterOptions& options) {
    mesh.validate();
    pose.validate();
    intrinsics.validate();

    RenderedView view;
    view.pose = pose;
    view.intrinsics = intrinsics;
    view.depth = DepthImage(intrinsics.width, intrinsics.height);
    if (options.triangle_ids) view.triangle_id.assign(intrinsics.pixel_count(), -1);

    const bool color = options.color && mesh.has_colors();
    const Camera cam(pose, intrinsics);
    std::vector<Vec3> cam_pos(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        cam_pos[i] = cam.to_camera(mesh.vertices[i].to_double());
    }

    Rasterizer raster(intrinsics, view, color, options.triangle_ids);
    const double near = options.near_plane;
    const Rgb white{1.0f, 1.0f, 1.0f};
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        const std::array<std::uint32_t, 3> idx{tri.a, tri.b, tri.c};
        std::array<ClipVertex, 3> in;
        int behind = 0;
        for (int i = 0; i < 3; ++i) {
            in[i].pos = cam_pos[idx[i]];
            in[i].color = color ? mesh.vertex_colors[idx[i]] : white;
            behind += in[i].pos.z < near ? 1 : 0;
        }
        if (behind == 3) continue;
        const auto id = static_cast<std::int32_t>(t);
        if (behind == 0) {
            raster.draw(in[0], in[1], in[2], id);
            continue;
        }
        std::array<ClipVertex, 4> poly;
        const int n = clip_near(in, near, poly);
        for (int i = 1; i + 1 < n; ++i) raster.draw(poly[0], poly[i], poly[i + 1], id);
    }
    raster.resolve_color();
    return view;
}

}  // namespace urbanfield::view
