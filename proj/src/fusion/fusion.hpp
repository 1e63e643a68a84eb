#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "core/types.hpp"
#include "segment/segments.hpp"
#include "view/views.hpp"

namespace urbanfield::fusion {

inline constexpr std::size_t kFusedLevels = 4;  // whole image + three segment levels

struct VisibilityParams {
    double depth_tolerance_abs = 0.5;
    double depth_tolerance_rel = 0.01;

    void validate() const;
    double tolerance(double range) const {
        return std::max(depth_tolerance_abs, depth_tolerance_rel * range);
    }
};

struct PixelHit {
    int px = 0;
    int py = 0;
    double range = 0.0;
};

// Visible iff the point projects inside the image in front of the camera onto a
// hit pixel whose depth is within tolerance of the point's distance.
std::optional<PixelHit> point_visible(const Vec3& p, const view::RenderedView& view,
                                      const view::Camera& camera, const VisibilityParams& params);
std::optional<PixelHit> point_visible(const Vec3& p, const view::RenderedView& view,
                                      const VisibilityParams& params);

// Everything fusion needs from one retained view.
struct ViewFeatures {
    const view::RenderedView* view = nullptr;
    seg::PixelLevelMap levels;                        // indices into segment_embeddings
    std::vector<std::vector<float>> segment_embeddings;
    std::vector<float> image_embedding;               // level 0
};

// Exact per-(level, point) sums in 32.32 fixed point plus counts. Addition is
// associative, so merged partial accumulators equal a single pass bit for bit.
class FusionAccumulator {
public:
    static constexpr double kScale = 4294967296.0;  // 2^32

    FusionAccumulator(std::size_t points, std::size_t levels, std::size_t dim);

    void add(std::size_t level, std::size_t point, std::span<const float> embedding);
    void merge(const FusionAccumulator& other);

    std::size_t points() const { return points_; }
    std::size_t levels() const { return levels_; }
    std::size_t dim() const { return dim_; }
    std::uint32_t count(std::size_t level, std::size_t point) const {
        return counts_[level * points_ + point];
    }
    // Writes means for local points into `store` rows given by `rows[i]`.
    void finalize_into(FeatureStore& store, std::span<const std::size_t> rows) const;
    FeatureStore finalize(const PointCloud& points) const;

    friend bool operator==(const FusionAccumulator&, const FusionAccumulator&) = default;

private:
    std::size_t points_, levels_, dim_;
    std::vector<std::int64_t> sums_;
    std::vector<std::uint32_t> counts_;
};

// Adds the contributions of `views` for the points listed in `subset`
// (local index i refers to points[subset[i]]).
void accumulate(FusionAccumulator& acc, const PointCloud& points,
                std::span<const std::size_t> subset, std::span<const ViewFeatures> views,
                const VisibilityParams& params);

FeatureStore fuse_embeddings(const PointCloud& points, std::span<const ViewFeatures> views,
                             const VisibilityParams& params);

// Processes square xy chunks of points; each chunk only visits views whose
// frustum can contain the chunk's bounding box.
FeatureStore fuse_embeddings_chunked(const PointCloud& points, std::span<const ViewFeatures> views,
                                     const VisibilityParams& params, double chunk_size);

// True unless every point of the box is provably outside the view frustum.
bool frustum_may_contain(const view::RenderedView& view, const Vec3& box_min, const Vec3& box_max);

// Mean of per-view scalars over the views in which each point is visible.
// Points never seen are left unobserved with value 0.
ScoreField fuse_scalar_scores(const PointCloud& points, std::span<const view::RenderedView> views,
                              std::span<const double> scalars, const VisibilityParams& params);

}  // namespace urbanfield::fusion
