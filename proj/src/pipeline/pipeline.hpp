#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "analytics/grid.hpp"
#include "fusion/fusion.hpp"
#include "query/query.hpp"
#include "segment/embeddings.hpp"
#include "segment/provider.hpp"
#include "segment/segments.hpp"
#include "view/views.hpp"

namespace urbanfield::pipeline {

struct RenderSettings {
    view::ViewSampleConfig sampling;
    view::CameraIntrinsics intrinsics;
    std::optional<Bounds2> bounds;  // pose grid extent; mesh xy bounds when absent
    bool triangle_ids = false;
};

struct RenderResult {
    std::vector<view::RenderedView> views;  // retained, id = pose index
    std::size_t sampled = 0;
};

// Samples one pose per grid cell, rasterizes all of them and applies the view filter.
RenderResult render_views(const TriangleMesh& mesh, const RenderSettings& settings, std::uint64_t seed);

// Segments grouped by view id, after the area filter.
using SegmentsByView = std::map<std::int64_t, std::vector<seg::SegmentRecord>>;
SegmentsByView group_segments(std::vector<seg::SegmentRecord> records,
                              double min_area_frac = seg::kDefaultMinAreaFraction);

// Whole-image (level 0) and highlighted-crop embeddings for every view and
// every retained segment. Views without a color image are rejected.
seg::EmbeddingTable embed_views(const std::vector<view::RenderedView>& views, const SegmentsByView& segments,
                                seg::Provider& provider, const seg::HighlightSpec& highlight = {});

// Assembles fusion inputs; every referenced embedding must be in `table`.
std::vector<fusion::ViewFeatures> view_features(const std::vector<view::RenderedView>& views,
                                                const SegmentsByView& segments,
                                                const seg::EmbeddingTable& table);

struct GridResult {
    ScoreField field;
    analytics::GridRaster projected;     // per-cell means, missing where no point
    analytics::GridRaster interpolated;  // fully filled
};

GridResult query_grid(const FeatureStore& store, const query::QuerySpec& spec, seg::Provider& provider,
                      double cell_size, query::PromptCache* cache = nullptr);
GridResult grid_from_field(const FeatureStore& store, ScoreField field, double cell_size);

}  // namespace urbanfield::pipeline
