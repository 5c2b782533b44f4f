#include "core/learning.hpp"

#include "core/error.hpp"

namespace b3d {

PointCloud fuse_views(const std::vector<DepthImage>& frames,
                      const std::vector<Pose>& camera_poses,
                      const CameraIntrinsics& k) {
  require(frames.size() == camera_poses.size(), ErrorCode::invalid,
          "fuse_views: frame/pose count mismatch");
  require(!frames.empty(), ErrorCode::invalid, "fuse_views: no frames");
  PointCloud fused;
  fused.frame = CloudFrame::world;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const PointCloud world =
        transform_cloud(depth_to_cloud(frames[i], k), camera_poses[i]);
    fused.points.insert(fused.points.end(), world.points.begin(), world.points.end());
  }
  return fused;
}

PointCloud crop_to_region(const PointCloud& c, const Vec3& lo, const Vec3& hi) {
  PointCloud out;
  out.frame = c.frame;
  for (const Vec3& p : c.points) {
    if (p.x() > lo.x() && p.x() < hi.x() && p.y() > lo.y() && p.y() < hi.y() &&
        p.z() > lo.z() && p.z() < hi.z())
      out.points.push_back(p);
  }
  return out;
}

ObjectModel learn_object(const std::vector<DepthImage>& frames,
                         const std::vector<Pose>& camera_poses,
                         const CameraIntrinsics& k, const Vec3& crop_lo,
                         const Vec3& crop_hi, double resolution, int id) {
  PointCloud cloud = crop_to_region(fuse_views(frames, camera_poses, k), crop_lo, crop_hi);
  require(!cloud.points.empty(), ErrorCode::invalid,
          "learn_object: cropped cloud is empty");

  Vec3 lo = cloud.points.front(), hi = cloud.points.front();
  for (const Vec3& p : cloud.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  // model frame: x/y centered, z = 0 at the bounding-box bottom
  const Vec3 shift(-(lo.x() + hi.x()) / 2, -(lo.y() + hi.y()) / 2, -lo.z());
  for (Vec3& p : cloud.points) p += shift;

  return ObjectModel::from_grid(id, voxelize(cloud, resolution));
}

}  // namespace b3d
