#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "view/views.hpp"

namespace urbanfield::view {

// Depth container "OC3Z": version u32, width u32, height u32, 8 reserved, f32 row-major.
void write_depth(const DepthImage& depth, const std::filesystem::path& path);
DepthImage read_depth(const std::filesystem::path& path);

struct ViewRecord {
    std::int64_t id = 0;
    CameraPose pose;
    CameraIntrinsics intrinsics;
    std::string depth_path;   // relative to the manifest directory unless absolute
    std::string color_path;   // optional
};

// One JSON object per line.
void write_views_manifest(const std::vector<ViewRecord>& records, const std::filesystem::path& path);
std::vector<ViewRecord> read_views_manifest(const std::filesystem::path& path);

// Loads depth (and color when present) for every record.
std::vector<RenderedView> load_views(const std::filesystem::path& manifest);

// Writes depth/<id>.oc3z and color/<id>.png under `dir` plus `dir/views.jsonl`.
void save_views(const std::vector<RenderedView>& views, const std::filesystem::path& dir);

}  // namespace urbanfield::view
