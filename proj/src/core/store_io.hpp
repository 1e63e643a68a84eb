#pragma once

#include <filesystem>

#include "core/types.hpp"

namespace urbanfield {

// Little-endian containers:
//   "OC3D" feature store: version u32, n u64, levels u8, dim u16, 5 reserved,
//          positions n*3 f32, then per level: counts n*u32, features n*dim f32.
//   "OC3P" point cloud:   version u32, n u64, 8 reserved, positions n*3 f32.
//   "OC3M" mesh:          version u32, vertices u64, triangles u64, flags u8, 7 reserved,
//          vertices*3 f32, triangles*3 u32, [vertices*3 f32 colors if flags&1].
inline constexpr std::uint32_t kContainerVersion = 1;

void write_feature_store(const FeatureStore& store, const std::filesystem::path& path);
FeatureStore read_feature_store(const std::filesystem::path& path);

void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path);
PointCloud read_point_cloud(const std::filesystem::path& path);

void write_mesh(const TriangleMesh& mesh, const std::filesystem::path& path);
TriangleMesh read_mesh(const std::filesystem::path& path);

}  // namespace urbanfield
