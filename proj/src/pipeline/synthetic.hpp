#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pipeline/pipeline.hpp"
#include "synth/city.hpp"

namespace urbanfield::pipeline {

struct SyntheticSceneConfig {
    std::uint64_t seed = 7;
    synth::CityParams city;
    std::size_t point_count = 120000;
    RenderSettings render;
    fusion::VisibilityParams visibility;
    double chunk_size = 100.0;
    double cell_size = analytics::kDefaultCellSize;

    // Defaults used by the end-to-end benchmark: 256x256 views with a 90 degree
    // field of view on a 15 m pose grid over the city.
    static SyntheticSceneConfig defaults();
};

// A generated city carried through rendering, segmentation, embedding and fusion.
struct SyntheticScene {
    SyntheticSceneConfig config;
    synth::SyntheticCity city;
    PointCloud points;
    std::vector<view::RenderedView> views;
    std::size_t sampled_views = 0;
    SegmentsByView segments;
    seg::EmbeddingTable embeddings;
    FeatureStore store;
};

SyntheticScene build_synthetic_scene(const SyntheticSceneConfig& config, seg::Provider& provider);

// Footprint evaluation of a query on the interpolated grid: every cell is
// labelled 1 when its center lies inside a building footprint.
struct FootprintEvaluation {
    GridResult grid;
    std::vector<int> labels;
    double roc_auc = 0.0;
    double max_accuracy = 0.0;
};

FootprintEvaluation evaluate_footprints(const SyntheticScene& scene, const query::QuerySpec& spec,
                                        seg::Provider& provider);

}  // namespace urbanfield::pipeline
