#pragma once

#include <vector>

#include "core/geometry.hpp"
#include "core/scene_graph.hpp"

namespace b3d {

// Concatenated world-frame backprojections of the posed frames.
PointCloud fuse_views(const std::vector<DepthImage>& frames,
                      const std::vector<Pose>& camera_poses,
                      const CameraIntrinsics& k);

// Keeps points strictly inside the box, order preserved.
PointCloud crop_to_region(const PointCloud& c, const Vec3& lo, const Vec3& hi);

// fuse -> crop -> recenter (origin at bounding-box center-bottom) ->
// voxelize -> mesh. The result is renderable and ready for the library.
ObjectModel learn_object(const std::vector<DepthImage>& frames,
                         const std::vector<Pose>& camera_poses,
                         const CameraIntrinsics& k, const Vec3& crop_lo,
                         const Vec3& crop_hi, double resolution, int id = 0);

}  // namespace b3d
