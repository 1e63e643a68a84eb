#include "pipeline/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"

namespace urbanfield::pipeline {

RenderResult render_views(const TriangleMesh& mesh, const RenderSettings& settings, std::uint64_t seed) {
    settings.sampling.validate();
    settings.intrinsics.validate();
    Bounds2 bounds;
    if (settings.bounds) {
        bounds = *settings.bounds;
    } else {
        if (mesh.vertices.empty()) invalid_argument("cannot derive scene bounds from an empty mesh");
        bounds = {{INFINITY, INFINITY}, {-INFINITY, -INFINITY}};
        for (const auto& v : mesh.vertices) {
            bounds.min.x = std::min<double>(bounds.min.x, v.x);
            bounds.min.y = std::min<double>(bounds.min.y, v.y);
            bounds.max.x = std::max<double>(bounds.max.x, v.x);
            bounds.max.y = std::max<double>(bounds.max.y, v.y);
        }
    }
    SeededRng rng(seed, "poses");
    const auto poses = view::sample_camera_poses(settings.sampling, bounds, rng);
    view::RasterOptions options;
    options.triangle_ids = settings.triangle_ids;
    std::vector<std::optional<view::RenderedView>> rendered(poses.size());
    parallel_for(poses.size(), [&](std::size_t i) {
        auto v = view::rasterize(mesh, poses[i], settings.intrinsics, options);
        if (!view::keep_view(v.depth, settings.sampling)) return;
        v.id = static_cast<std::int64_t>(i);
        rendered[i] = std::move(v);
    });
    RenderResult result;
    result.sampled = poses.size();
    for (auto& v : rendered) {
        if (v) result.views.push_back(std::move(*v));
    }
    return result;
}

SegmentsByView group_segments(std::vector<seg::SegmentRecord> records, double min_area_frac) {
    SegmentsByView out;
    for (auto& r : records) {
        r.validate();
        const auto pixels = static_cast<std::uint64_t>(r.width) * static_cast<std::uint64_t>(r.height);
        if (r.area_px < seg::min_area_pixels(pixels, min_area_frac)) continue;
        out[r.view_id].push_back(std::move(r));
    }
    return out;
}

seg::EmbeddingTable embed_views(const std::vector<view::RenderedView>& views, const SegmentsByView& segments,
                                seg::Provider& provider, const seg::HighlightSpec& highlight) {
    highlight.validate();
    static const std::vector<seg::SegmentRecord> kNone;
    std::vector<std::vector<std::pair<seg::EmbeddingKey, std::vector<float>>>> rows(views.size());
    parallel_for(views.size(), [&](std::size_t i) {
        const auto& v = views[i];
        if (!v.color) invalid_argument("view " + std::to_string(v.id) + " has no color image");
        rows[i].push_back({{v.id, 0, -1}, provider.embed_image(*v.color)});
        const auto it = segments.find(v.id);
        const auto& recs = it == segments.end() ? kNone : it->second;
        for (const auto& r : recs) {
            if (r.width != v.color->width || r.height != v.color->height) {
                invalid_argument("segment size does not match view " + std::to_string(v.id));
            }
            const auto crop = seg::crop_and_highlight(*v.color, r, highlight);
            rows[i].push_back({{v.id, r.level, r.segment_id}, provider.embed_image(crop)});
        }
    });
    seg::EmbeddingTable table;
    table.dim = provider.dim();
    for (auto& per_view : rows) {
        for (auto& [key, e] : per_view) table.insert(key, std::move(e));
    }
    return table;
}

std::vector<fusion::ViewFeatures> view_features(const std::vector<view::RenderedView>& views,
                                                const SegmentsByView& segments,
                                                const seg::EmbeddingTable& table) {
    std::vector<fusion::ViewFeatures> out;
    out.reserve(views.size());
    for (const auto& v : views) {
        fusion::ViewFeatures vf;
        vf.view = &v;
        const auto* image = table.find({v.id, 0, -1});
        if (!image) fail(ErrorCode::Format, "no image embedding for view " + std::to_string(v.id));
        vf.image_embedding = *image;
        const auto it = segments.find(v.id);
        if (it != segments.end() && !it->second.empty()) {
            vf.levels = seg::build_pixel_level_map(it->second);
            for (const auto& r : it->second) {
                const auto* e = table.find({v.id, r.level, r.segment_id});
                if (!e) {
                    fail(ErrorCode::Format, "no embedding for view " + std::to_string(v.id) + " level " +
                                                std::to_string(r.level) + " segment " + std::to_string(r.segment_id));
                }
                vf.segment_embeddings.push_back(*e);
            }
        }
        out.push_back(std::move(vf));
    }
    return out;
}

GridResult grid_from_field(const FeatureStore& store, ScoreField field, double cell_size) {
    GridResult r;
    r.projected = analytics::project_scores_to_grid(store.points(), field, cell_size);
    r.interpolated = analytics::interpolate_grid(r.projected);
    r.field = std::move(field);
    return r;
}

GridResult query_grid(const FeatureStore& store, const query::QuerySpec& spec, seg::Provider& provider,
                      double cell_size, query::PromptCache* cache) {
    return grid_from_field(store, query::score_field(store, spec, provider, cache), cell_size);
}

}  // namespace urbanfield::pipeline
