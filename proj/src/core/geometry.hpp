#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cstdint>
#include <vector>

namespace b3d {

using Vec3 = Eigen::Vector3d;
using Vec3i = Eigen::Vector3i;
using Quat = Eigen::Quaterniond;
using Mat3 = Eigen::Matrix3d;

// Rigid transform: world = rotation * local + translation.
// Quaternions are kept unit-normalized after every operation.
struct Pose {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_axis_angle(const Vec3& axis, double angle,
                              const Vec3& translation = Vec3::Zero());
  static Pose rot_z(double angle) {
    return from_axis_angle(Vec3::UnitZ(), angle);
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Mat3 rotation_matrix() const { return rotation.toRotationMatrix(); }
};

Pose compose(const Pose& a, const Pose& b);  // applies b, then a
Pose inverse(const Pose& p);

// Geodesic angle between rotations, radians in [0, pi].
double rotation_angle_between(const Quat& a, const Quat& b);

// Pinhole camera, +z forward, +x right, +y down, no distortion.
// Pixel (u, v) views along direction ((u-cx)/fx, (v-cy)/fy, 1).
struct CameraIntrinsics {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  std::uint32_t width = 0, height = 0;
  double near = 0, far = 0;

  void validate() const;
};

// Metric depth per pixel, row-major. Pixels that hit nothing carry the
// sentinel value, which is the camera's far-plane depth.
struct DepthImage {
  std::uint32_t width = 0, height = 0;
  std::vector<float> depth;

  static DepthImage constant(std::uint32_t w, std::uint32_t h, float value);
  float at(std::uint32_t u, std::uint32_t v) const {
    return depth[static_cast<std::size_t>(v) * width + u];
  }
  float& at(std::uint32_t u, std::uint32_t v) {
    return depth[static_cast<std::size_t>(v) * width + u];
  }
};

enum class CloudFrame { camera, world };

struct PointCloud {
  std::vector<Vec3> points;
  CloudFrame frame = CloudFrame::camera;
};

// Occupancy grid; occupied voxel coordinates are kept sorted and unique so
// that equality and serialization are order-independent.
struct VoxelGrid {
  double resolution = 0;
  Vec3 origin = Vec3::Zero();
  std::vector<Vec3i> occupied;

  // world-space (model-frame) lower corner of voxel (i,j,k)
  Vec3 voxel_corner(const Vec3i& v) const {
    return origin + resolution * v.cast<double>();
  }
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  bool empty() const { return triangles.empty(); }
};

// Backprojects non-sentinel pixels to camera-frame points, row-major order.
// Pixel (u,v) at depth z maps to ((u-cx)z/fx, (v-cy)z/fy, z).
PointCloud depth_to_cloud(const DepthImage& d, const CameraIntrinsics& k);

PointCloud transform_cloud(const PointCloud& c, const Pose& p);

// Bins points at the given resolution. The grid origin is the cloud minimum
// snapped down to a resolution-aligned lattice, so voxelization is
// translation-covariant at grid granularity.
VoxelGrid voxelize(const PointCloud& c, double resolution);

// Exterior cube faces of the occupied set, two triangles per face with
// outward winding; faces shared by two occupied voxels are omitted.
// Vertices are deduplicated on the voxel-corner lattice.
TriangleMesh voxel_to_mesh(const VoxelGrid& g);

// Axis-aligned extents of the occupied region, multiples of resolution.
Vec3 bounding_box(const VoxelGrid& g);

// Axis-aligned bounds of a mesh in its own frame.
void mesh_bounds(const TriangleMesh& m, Vec3& lo, Vec3& hi);

}  // namespace b3d
