#include "fusion/fusion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

namespace urbanfield::fusion {

void VisibilityParams::validate() const {
    if (!(depth_tolerance_abs >= 0.0) || !(depth_tolerance_rel >= 0.0)) {
        invalid_argument("depth tolerances must be non-negative");
    }
    if (depth_tolerance_abs == 0.0 && depth_tolerance_rel == 0.0) {
        invalid_argument("depth tolerances cannot both be zero");
    }
}

std::optional<PixelHit> point_visible(const Vec3& p, const view::RenderedView& view,
                                      const view::Camera& camera, const VisibilityParams& params) {
    const auto pr = camera.project(p);
    if (!pr) return std::nullopt;
    const float d = view.depth.at(pr->px, pr->py);
    if (!view::DepthImage::hit(d)) return std::nullopt;
    if (std::abs(static_cast<double>(d) - pr->range) > params.tolerance(pr->range)) return std::nullopt;
    return PixelHit{pr->px, pr->py, pr->range};
}

std::optional<PixelHit> point_visible(const Vec3& p, const view::RenderedView& view,
                                      const VisibilityParams& params) {
    return point_visible(p, view, view.camera(), params);
}

FusionAccumulator::FusionAccumulator(std::size_t points, std::size_t levels, std::size_t dim)
    : points_(points), levels_(levels), dim_(dim),
      sums_(points * levels * dim, 0), counts_(points * levels, 0) {}

void FusionAccumulator::add(std::size_t level, std::size_t point, std::span<const float> embedding) {
    auto* sum = sums_.data() + (level * points_ + point) * dim_;
    for (std::size_t k = 0; k < dim_; ++k) {
        sum[k] += static_cast<std::int64_t>(std::llround(static_cast<double>(embedding[k]) * kScale));
    }
    ++counts_[level * points_ + point];
}

void FusionAccumulator::merge(const FusionAccumulator& other) {
    if (other.points_ != points_ || other.levels_ != levels_ || other.dim_ != dim_) {
        invalid_argument("cannot merge accumulators of different shapes");
    }
    for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i] += other.sums_[i];
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

void FusionAccumulator::finalize_into(FeatureStore& store, std::span<const std::size_t> rows) const {
    for (std::size_t l = 0; l < levels_; ++l) {
        for (std::size_t i = 0; i < points_; ++i) {
            const auto n = counts_[l * points_ + i];
            store.set_obs_count(l, rows[i], n);
            auto out = store.feature(l, rows[i]);
            if (n == 0) {
                std::fill(out.begin(), out.end(), 0.0f);
                continue;
            }
            const auto* sum = sums_.data() + (l * points_ + i) * dim_;
            for (std::size_t k = 0; k < dim_; ++k) {
                out[k] = static_cast<float>(static_cast<double>(sum[k]) / kScale / n);
            }
        }
    }
}

FeatureStore FusionAccumulator::finalize(const PointCloud& points) const {
    if (points.size() != points_) invalid_argument("point count does not match accumulator");
    FeatureStore store(points, levels_, dim_);
    std::vector<std::size_t> rows(points_);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    finalize_into(store, rows);
    return store;
}

namespace {

std::size_t check_views(std::span<const ViewFeatures> views) {
    std::size_t dim = 0;
    for (const auto& vf : views) {
        if (!vf.view) invalid_argument("view features without a view");
        const auto check = [&](const std::vector<float>& e, const char* what) {
            if (dim == 0) dim = e.size();
            if (e.size() != dim || dim == 0) {
                invalid_argument(std::string("dimension mismatch in ") + what + " of view " +
                                 std::to_string(vf.view->id));
            }
        };
        check(vf.image_embedding, "image embedding");
        for (const auto& e : vf.segment_embeddings) check(e, "segment embedding");
        const auto pixels = vf.view->intrinsics.pixel_count();
        for (const auto& lvl : vf.levels.segment) {
            if (!lvl.empty() && lvl.size() != pixels) {
                invalid_argument("pixel level map size mismatch in view " + std::to_string(vf.view->id));
            }
            for (auto idx : lvl) {
                if (idx >= static_cast<std::int32_t>(vf.segment_embeddings.size())) {
                    invalid_argument("segment index without embedding in view " +
                                     std::to_string(vf.view->id));
                }
            }
        }
    }
    if (dim == 0) invalid_argument("no views to fuse");
    return dim;
}

std::vector<const ViewFeatures*> by_view_id(std::span<const ViewFeatures> views) {
    std::vector<const ViewFeatures*> order;
    for (const auto& v : views) order.push_back(&v);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto* a, const auto* b) { return a->view->id < b->view->id; });
    return order;
}

void accumulate_sorted(FusionAccumulator& acc, const PointCloud& points,
                       std::span<const std::size_t> subset,
                       std::span<const ViewFeatures* const> order, const VisibilityParams& params) {
    for (const auto* vf : order) {
        const auto cam = vf->view->camera();
        const auto width = static_cast<std::size_t>(vf->view->intrinsics.width);
        for (std::size_t i = 0; i < subset.size(); ++i) {
            const auto hit = point_visible(points[subset[i]].to_double(), *vf->view, cam, params);
            if (!hit) continue;
            acc.add(0, i, vf->image_embedding);
            const std::size_t pix = static_cast<std::size_t>(hit->py) * width + hit->px;
            for (int l = seg::kMinLevel; l <= seg::kMaxLevel; ++l) {
                const auto& lvl = vf->levels.segment[l - 1];
                if (lvl.empty()) continue;
                const auto idx = lvl[pix];
                if (idx >= 0) acc.add(static_cast<std::size_t>(l), i, vf->segment_embeddings[idx]);
            }
        }
    }
}

}  // namespace

void accumulate(FusionAccumulator& acc, const PointCloud& points, std::span<const std::size_t> subset,
                std::span<const ViewFeatures> views, const VisibilityParams& params) {
    params.validate();
    const auto dim = check_views(views);
    if (dim != acc.dim()) invalid_argument("embedding dimension does not match accumulator");
    if (subset.size() != acc.points() || acc.levels() != kFusedLevels) {
        invalid_argument("accumulator shape does not match the point subset");
    }
    const auto order = by_view_id(views);
    accumulate_sorted(acc, points, subset, order, params);
}

FeatureStore fuse_embeddings(const PointCloud& points, std::span<const ViewFeatures> views,
                             const VisibilityParams& params) {
    const auto dim = check_views(views);
    FusionAccumulator acc(points.size(), kFusedLevels, dim);
    std::vector<std::size_t> all(points.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    accumulate(acc, points, all, views, params);
    return acc.finalize(points);
}

bool frustum_may_contain(const view::RenderedView& view, const Vec3& lo, const Vec3& hi) {
    const auto cam = view.camera();
    const auto& k = view.intrinsics;
    std::array<Vec3, 8> c;
    for (int i = 0; i < 8; ++i) {
        c[i] = cam.to_camera({(i & 1) ? hi.x : lo.x, (i & 2) ? hi.y : lo.y, (i & 4) ? hi.z : lo.z});
    }
    // A visible point satisfies all of these half-spaces; if every corner
    // violates one of them, so does the whole box.
    const auto all_outside = [&](auto&& inside) {
        return std::none_of(c.begin(), c.end(), inside);
    };
    if (all_outside([](const Vec3& p) { return p.z > 0.0; })) return false;
    if (all_outside([&](const Vec3& p) { return k.fx * p.x + k.cx * p.z >= 0.0; })) return false;
    if (all_outside([&](const Vec3& p) { return k.fx * p.x - (k.width - k.cx) * p.z <= 0.0; })) return false;
    if (all_outside([&](const Vec3& p) { return k.fy * p.y + k.cy * p.z >= 0.0; })) return false;
    if (all_outside([&](const Vec3& p) { return k.fy * p.y - (k.height - k.cy) * p.z <= 0.0; })) return false;
    return true;
}

FeatureStore fuse_embeddings_chunked(const PointCloud& points, std::span<const ViewFeatures> views,
                                     const VisibilityParams& params, double chunk_size) {
    if (!(chunk_size > 0.0)) invalid_argument("chunk size must be positive");
    params.validate();
    const auto dim = check_views(views);
    const auto order = by_view_id(views);

    std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> chunks;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto key = std::make_pair(static_cast<std::int64_t>(std::floor(points[i].x / chunk_size)),
                                        static_cast<std::int64_t>(std::floor(points[i].y / chunk_size)));
        chunks[key].push_back(i);
    }

    FeatureStore store(points, kFusedLevels, dim);
    for (const auto& [key, members] : chunks) {
        Vec3 lo = points[members.front()].to_double(), hi = lo;
        for (auto i : members) {
            const auto p = points[i].to_double();
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
        }
        std::vector<const ViewFeatures*> chunk_views;
        for (const auto* vf : order) {
            if (frustum_may_contain(*vf->view, lo, hi)) chunk_views.push_back(vf);
        }
        FusionAccumulator acc(members.size(), kFusedLevels, dim);
        accumulate_sorted(acc, points, members, chunk_views, params);
        acc.finalize_into(store, members);
    }
    return store;
}

ScoreField fuse_scalar_scores(const PointCloud& points, std::span<const view::RenderedView> views,
                              std::span<const double> scalars, const VisibilityParams& params) {
    params.validate();
    if (scalars.size() != views.size()) invalid_argument("need exactly one scalar per view");
    std::vector<std::size_t> order(views.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return views[a].id < views[b].id; });
    std::vector<double> sum(points.size(), 0.0);
    std::vector<std::uint32_t> count(points.size(), 0);
    for (auto v : order) {
        if (!std::isfinite(scalars[v])) invalid_argument("non-finite view scalar");
        const auto cam = views[v].camera();
        for (std::size_t p = 0; p < points.size(); ++p) {
            if (point_visible(points[p].to_double(), views[v], cam, params)) {
                sum[p] += scalars[v];
                ++count[p];
            }
        }
    }
    ScoreField field;
    field.values.assign(points.size(), 0.0);
    field.observed.assign(points.size(), 0);
    for (std::size_t p = 0; p < points.size(); ++p) {
        if (count[p] == 0) continue;
        field.values[p] = sum[p] / count[p];
        field.observed[p] = 1;
    }
    return field;
}

}  // namespace urbanfield::fusion
