#include "pipeline/synthetic.hpp"

#include "analytics/ground_truth.hpp"
#include "eval/metrics.hpp"

namespace urbanfield::pipeline {

SyntheticSceneConfig SyntheticSceneConfig::defaults() {
    SyntheticSceneConfig c;
    c.render.intrinsics = view::CameraIntrinsics::from_fov(256, 256, 90.0);
    c.render.sampling.grid_spacing = 15.0;
    c.render.bounds = Bounds2{{0.0, 0.0}, {c.city.size, c.city.size}};
    c.render.triangle_ids = true;
    return c;
}

SyntheticScene build_synthetic_scene(const SyntheticSceneConfig& config, seg::Provider& provider) {
    SyntheticScene s;
    s.config = config;
    SeededRng rng(config.seed, "synthetic-city");
    s.city = synth::generate_city(config.city, rng);
    auto point_rng = rng.derive("points");
    s.points = synth::sample_surface_points(s.city, config.point_count, point_rng);

    auto render = config.render;
    render.triangle_ids = true;
    auto rendered = render_views(s.city.mesh, render, config.seed);
    s.views = std::move(rendered.views);
    s.sampled_views = rendered.sampled;

    std::vector<seg::SegmentRecord> records;
    for (auto& v : s.views) {
        auto segs = synth::synthetic_segments(v, s.city.labels);
        records.insert(records.end(), std::make_move_iterator(segs.begin()), std::make_move_iterator(segs.end()));
        v.triangle_id.clear();
        v.triangle_id.shrink_to_fit();
    }
    s.segments = group_segments(std::move(records));
    s.embeddings = embed_views(s.views, s.segments, provider);
    const auto features = view_features(s.views, s.segments, s.embeddings);
    s.store = fusion::fuse_embeddings_chunked(s.points, features, config.visibility, config.chunk_size);
    return s;
}

FootprintEvaluation evaluate_footprints(const SyntheticScene& scene, const query::QuerySpec& spec,
                                        seg::Provider& provider) {
    FootprintEvaluation e;
    e.grid = query_grid(scene.store, spec, provider, scene.config.cell_size);
    const auto& g = e.grid.interpolated;
    e.labels = analytics::footprint_cell_labels(scene.city.footprints, g.origin, g.cell_size, g.width, g.height);
    e.roc_auc = eval::roc_auc(g.values, e.labels);
    e.max_accuracy = eval::max_accuracy(g.values, e.labels);
    return e;
}

}  // namespace urbanfield::pipeline
