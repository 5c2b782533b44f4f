#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "core/geometry.hpp"

namespace b3d {

using Json = nlohmann::json;

// "SDPT" | u32 width | u32 height | width*height float32 depths, row-major.
// All fields little-endian, depths in meters.
void save_depth_image(const DepthImage& img, const std::string& path);
DepthImage load_depth_image(const std::string& path);

// "SVOX" | f32 resolution | f32[3] origin | u32 count | count * i32[3].
void save_voxel_grid(const VoxelGrid& grid, const std::string& path);
VoxelGrid load_voxel_grid(const std::string& path);

// Whole-file helpers; writes go to a temp file and are atomically renamed so
// failures never leave partial output behind.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

Json pose_to_json(const Pose& p);
Pose pose_from_json(const Json& j);

Json intrinsics_to_json(const CameraIntrinsics& k);
CameraIntrinsics intrinsics_from_json(const Json& j);

Json load_json_file(const std::string& path);
void save_json_file(const Json& j, const std::string& path);

}  // namespace b3d
