#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "core/errors.hpp"

namespace urbanfield {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

// Storage precision position. Everything persisted is 32-bit.
struct Vec3f {
    float x = 0.0f;
    float y = 0.0f;
    float z = 0.0f;

    Vec3 to_double() const { return {x, y, z}; }
    static Vec3f from(const Vec3& v) {
        return {static_cast<float>(v.x), static_cast<float>(v.y), static_cast<float>(v.z)};
    }
    friend bool operator==(const Vec3f&, const Vec3f&) = default;
};

struct Rgb {
    float r = 0.0f;
    float g = 0.0f;
    float b = 0.0f;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Bounds2 {
    Vec2 min;
    Vec2 max;

    double width() const { return max.x - min.x; }
    double height() const { return max.y - min.y; }
    bool empty() const { return !(max.x > min.x) || !(max.y > min.y); }
};

class PointCloud {
public:
    PointCloud() = default;
    explicit PointCloud(std::vector<Vec3f> positions);

    std::size_t size() const { return positions_.size(); }
    const std::vector<Vec3f>& positions() const { return positions_; }
    const Vec3f& operator[](std::size_t i) const { return positions_[i]; }
    Bounds2 bounds_xy() const;

    friend bool operator==(const PointCloud&, const PointCloud&) = default;

private:
    std::vector<Vec3f> positions_;
};

struct Triangle {
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    std::uint32_t c = 0;
    friend bool operator==(const Triangle&, const Triangle&) = default;
};

struct TriangleMesh {
    std::vector<Vec3f> vertices;
    std::vector<Triangle> triangles;
    std::vector<Rgb> vertex_colors;  // empty or one per vertex

    bool has_colors() const { return !vertex_colors.empty(); }
    // Throws InvalidArgument when an index is out of range or colors are misaligned.
    void validate() const;

    friend bool operator==(const TriangleMesh&, const TriangleMesh&) = default;
};

// Per-point, per-level mean embeddings with observation counts.
class FeatureStore {
public:
    FeatureStore() = default;
    FeatureStore(PointCloud points, std::size_t levels, std::size_t dim);

    const PointCloud& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    std::size_t levels() const { return levels_; }
    std::size_t dim() const { return dim_; }

    std::span<const float> feature(std::size_t level, std::size_t point) const {
        return {features_.data() + (level * size() + point) * dim_, dim_};
    }
    std::span<float> feature(std::size_t level, std::size_t point) {
        return {features_.data() + (level * size() + point) * dim_, dim_};
    }
    std::uint32_t obs_count(std::size_t level, std::size_t point) const {
        return obs_count_[level * size() + point];
    }
    void set_obs_count(std::size_t level, std::size_t point, std::uint32_t count) {
        obs_count_[level * size() + point] = count;
    }

    // Raw level-major buffers, used by the binary format.
    std::span<const float> level_features(std::size_t level) const {
        return {features_.data() + level * size() * dim_, size() * dim_};
    }
    std::span<float> level_features(std::size_t level) {
        return {features_.data() + level * size() * dim_, size() * dim_};
    }
    std::span<const std::uint32_t> level_counts(std::size_t level) const {
        return {obs_count_.data() + level * size(), size()};
    }
    std::span<std::uint32_t> level_counts(std::size_t level) {
        return {obs_count_.data() + level * size(), size()};
    }

    // Checks the zero-vector/zero-count equivalence and finiteness.
    void validate() const;

    friend bool operator==(const FeatureStore&, const FeatureStore&) = default;

private:
    PointCloud points_;
    std::size_t levels_ = 0;
    std::size_t dim_ = 0;
    std::vector<float> features_;
    std::vector<std::uint32_t> obs_count_;
};

// Per-point scalar field. Points with observed[p] == 0 are excluded downstream.
struct ScoreField {
    std::vector<double> values;
    std::vector<std::uint8_t> observed;

    std::size_t size() const { return values.size(); }
    bool is_observed(std::size_t p) const { return observed[p] != 0; }
    std::size_t observed_count() const;
};

}  // namespace urbanfield
