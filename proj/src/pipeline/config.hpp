#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "core/geo.hpp"
#include "eval/benchmark.hpp"
#include "fusion/fusion.hpp"
#include "query/query.hpp"
#include "segment/segments.hpp"
#include "view/views.hpp"

namespace urbanfield::pipeline {

enum class Command { RenderViews, Fuse, Query, Calibrate, Knn, Evaluate, Serve };

const char* command_name(Command c);
std::optional<Command> parse_command(const std::string& name);

// Where an evaluation task gets its samples.
struct TaskSource {
    std::string name;
    std::string source = "table";  // table | footprints | point_labels
    eval::TaskKind kind = eval::TaskKind::Continuous;
    eval::BenchmarkMode mode = eval::BenchmarkMode::ZeroShot;
    std::filesystem::path table;  // CSV with truth, score and/or f0..f{d-1} columns
    std::string unit;
    std::size_t quantiles = 5;
    std::size_t k = 5;
};

// JSON pipeline configuration. Relative paths resolve against the config
// file's directory.
struct PipelineConfig {
    std::filesystem::path base_dir;
    std::uint64_t seed = 0;
    std::string provider = "stub";

    std::optional<std::filesystem::path> mesh;
    std::optional<std::filesystem::path> points;
    std::optional<std::filesystem::path> labels;  // per-triangle labels enable the synthetic segmenter
    std::optional<Bounds2> bounds;
    std::optional<GeoTransform> geo;

    std::optional<std::filesystem::path> views_dir;
    view::ViewSampleConfig sampling;
    int image_width = 512;
    int image_height = 512;
    double fov_deg = 90.0;

    std::optional<std::filesystem::path> masks;
    double min_area_frac = seg::kDefaultMinAreaFraction;
    seg::HighlightSpec highlight;

    std::optional<std::filesystem::path> store;
    std::optional<std::filesystem::path> embeddings;             // written by fuse
    std::optional<std::filesystem::path> precomputed_embeddings; // read by fuse instead of the provider
    fusion::VisibilityParams visibility;
    double chunk_size = 100.0;

    double cell_size = 10.0;
    std::optional<query::QuerySpec> query;

    std::optional<std::filesystem::path> gt_points;
    std::optional<std::filesystem::path> gt_districts;
    std::optional<std::filesystem::path> gt_footprints;
    std::size_t quantiles = 5;
    std::size_t knn_k = 5;
    std::size_t knn_level = 0;

    eval::SplitSpec split;
    bool synthetic_benchmark = false;
    std::vector<TaskSource> tasks;

    std::string listen = "127.0.0.1:8080";

    std::filesystem::path views_manifest() const { return *views_dir / "views.jsonl"; }
    std::filesystem::path masks_path() const { return masks ? *masks : *views_dir / "masks.jsonl"; }
};

// Parses and type-checks; every problem found is reported in one Config error.
PipelineConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

// Checks that everything `command` needs is configured and that its inputs
// exist. Returns the list of problems (empty when valid).
std::vector<std::string> config_problems(const PipelineConfig& config, Command command);
// Throws a Config error listing every problem.
void validate_config(const PipelineConfig& config, Command command);

}  // namespace urbanfield::pipeline
