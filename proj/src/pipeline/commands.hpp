#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "pipeline/config.hpp"
#include "pipeline/pipeline.hpp"
#include "synth/city.hpp"

namespace urbanfield::pipeline {

// Output of one subcommand: the document written to --out (or stdout) and a
// short human-readable summary.
struct CommandOutput {
    std::string document;
    std::string summary;
};

// Validates the config for `command` and runs it. Serve is not handled here.
CommandOutput run_command(Command command, const PipelineConfig& config);

CommandOutput run_render_views(const PipelineConfig& config);
CommandOutput run_fuse(const PipelineConfig& config);
CommandOutput run_query(const PipelineConfig& config);
CommandOutput run_calibrate(const PipelineConfig& config);
CommandOutput run_knn(const PipelineConfig& config);
CommandOutput run_evaluate(const PipelineConfig& config);

// {origin, cell_size, width, height, values, missing_mask, fallback_fill,
// point_count, observed_points}; values are the interpolated grid (null only
// when nothing was observed), missing_mask marks cells without a point.
// Per-point scores (null when unobserved) are added on request.
nlohmann::json grid_to_json(const GridResult& grid, bool include_scores = false);

// Interpolated value of the cell containing `p`, if inside the raster.
std::optional<double> sample_grid(const analytics::GridRaster& grid, const Vec2& p);

// Writes a complete synthetic scene for the CLI: mesh.oc3m, labels.oc3l,
// points.oc3p, footprints.geojson and a config.json wired to them.
struct FixtureOptions {
    std::uint64_t seed = 7;
    synth::CityParams city;
    std::size_t point_count = 120000;
    double grid_spacing = 15.0;
    int image_size = 256;
    std::optional<Bounds2> view_bounds;  // city extent when absent
    bool loose_view_filter = false;      // keep every rendered view
    double lat = 47.3769;
    double lon = 8.5417;
};

nlohmann::json write_synthetic_fixture(const std::filesystem::path& dir, const FixtureOptions& options);

}  // namespace urbanfield::pipeline
