#include "core/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "core/error.hpp"

namespace b3d {

Pose Pose::from_axis_angle(const Vec3& axis, double angle,
                           const Vec3& translation) {
  Pose p;
  p.rotation = Quat(Eigen::AngleAxisd(angle, axis.normalized()));
  p.translation = translation;
  return p;
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = (a.rotation * b.rotation).normalized();
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

Pose inverse(const Pose& p) {
  Pose out;
  out.rotation = p.rotation.conjugate().normalized();
  out.translation = -(out.rotation * p.translation);
  return out;
}

double rotation_angle_between(const Quat& a, const Quat& b) {
  const double dot = std::min(1.0, std::abs(a.dot(b)));
  return 2.0 * std::acos(dot);
}

void CameraIntrinsics::validate() const {
  require(fx > 0 && fy > 0, ErrorCode::invalid, "intrinsics: focal lengths must be positive");
  require(width > 0 && height > 0, ErrorCode::invalid, "intrinsics: image dimensions must be positive");
  require(cx >= 0 && cx < width && cy >= 0 && cy < height, ErrorCode::invalid,
          "intrinsics: principal point outside image bounds");
  require(near > 0 && near < far, ErrorCode::invalid, "intrinsics: require 0 < near < far");
}

DepthImage DepthImage::constant(std::uint32_t w, std::uint32_t h, float value) {
  DepthImage img;
  img.width = w;
  img.height = h;
  img.depth.assign(static_cast<std::size_t>(w) * h, value);
  return img;
}

PointCloud depth_to_cloud(const DepthImage& d, const CameraIntrinsics& k) {
  require(d.width == k.width && d.height == k.height, ErrorCode::invalid,
          "depth_to_cloud: image dimensions do not match intrinsics");
  const float sentinel = static_cast<float>(k.far);
  PointCloud cloud;
  cloud.frame = CloudFrame::camera;
  cloud.points.reserve(d.depth.size());
  for (std::uint32_t v = 0; v < d.height; ++v) {
    for (std::uint32_t u = 0; u < d.width; ++u) {
      const float z = d.at(u, v);
      if (z >= sentinel) continue;
      const double zd = z;
      cloud.points.emplace_back((u - k.cx) * zd / k.fx, (v - k.cy) * zd / k.fy, zd);
    }
  }
  return cloud;
}

PointCloud transform_cloud(const PointCloud& c, const Pose& p) {
  PointCloud out;
  out.frame = c.frame;
  out.points.reserve(c.points.size());
  const Mat3 rot = p.rotation_matrix();
  for (const Vec3& q : c.points) out.points.emplace_back(rot * q + p.translation);
  return out;
}

VoxelGrid voxelize(const PointCloud& c, double resolution) {
  require(resolution > 0, ErrorCode::invalid, "voxelize: resolution must be positive");
  require(!c.points.empty(), ErrorCode::invalid, "voxelize: empty cloud");

  Vec3 lo = c.points.front();
  for (const Vec3& p : c.points) lo = lo.cwiseMin(p);

  VoxelGrid grid;
  grid.resolution = resolution;
  for (int axis = 0; axis < 3; ++axis)
    grid.origin[axis] = std::floor(lo[axis] / resolution) * resolution;

  grid.occupied.reserve(c.points.size());
  for (const Vec3& p : c.points) {
    Vec3i v;
    for (int axis = 0; axis < 3; ++axis)
      v[axis] = static_cast<int>(std::floor((p[axis] - grid.origin[axis]) / resolution));
    grid.occupied.push_back(v);
  }
  auto less = [](const Vec3i& a, const Vec3i& b) {
    return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
  };
  std::sort(grid.occupied.begin(), grid.occupied.end(), less);
  grid.occupied.erase(std::unique(grid.occupied.begin(), grid.occupied.end()),
                      grid.occupied.end());
  return grid;
}

namespace {

struct CornerHash {
  std::size_t operator()(const Vec3i& v) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (int i = 0; i < 3; ++i) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v[i]));
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

struct CornerEq {
  bool operator()(const Vec3i& a, const Vec3i& b) const noexcept { return a == b; }
};

// Quad corners for the face of a unit voxel facing direction `dir`
// (0..5 = -x,+x,-y,+y,-z,+z), wound counter-clockwise seen from outside.
const int kFaceCorners[6][4][3] = {
    {{0, 0, 0}, {0, 0, 1}, {0, 1, 1}, {0, 1, 0}},  // -x
    {{1, 0, 0}, {1, 1, 0}, {1, 1, 1}, {1, 0, 1}},  // +x
    {{0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1}},  // -y
    {{0, 1, 0}, {0, 1, 1}, {1, 1, 1}, {1, 1, 0}},  // +y
    {{0, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, 0, 0}},  // -z
    {{0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}},  // +z
};

const int kFaceOffsets[6][3] = {{-1, 0, 0}, {1, 0, 0},  {0, -1, 0},
                                {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};

}  // namespace

TriangleMesh voxel_to_mesh(const VoxelGrid& g) {
  require(!g.occupied.empty(), ErrorCode::invalid, "voxel_to_mesh: empty grid");

  std::unordered_map<Vec3i, std::uint8_t, CornerHash, CornerEq> occupied;
  occupied.reserve(g.occupied.size() * 2);
  for (const Vec3i& v : g.occupied) occupied.emplace(v, 1);

  std::unordered_map<Vec3i, std::uint32_t, CornerHash, CornerEq> corner_index;
  TriangleMesh mesh;

  auto corner_id = [&](const Vec3i& c) -> std::uint32_t {
    auto it = corner_index.find(c);
    if (it != corner_index.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(mesh.vertices.size());
    corner_index.emplace(c, id);
    mesh.vertices.push_back(g.voxel_corner(c));
    return id;
  };

  for (const Vec3i& v : g.occupied) {
    for (int face = 0; face < 6; ++face) {
      const Vec3i neighbor = v + Vec3i(kFaceOffsets[face][0], kFaceOffsets[face][1],
                                       kFaceOffsets[face][2]);
      if (occupied.count(neighbor)) continue;
      std::uint32_t quad[4];
      for (int i = 0; i < 4; ++i) {
        quad[i] = corner_id(v + Vec3i(kFaceCorners[face][i][0],
                                      kFaceCorners[face][i][1],
                                      kFaceCorners[face][i][2]));
      }
      mesh.triangles.push_back({quad[0], quad[1], quad[2]});
      mesh.triangles.push_back({quad[0], quad[2], quad[3]});
    }
  }
  return mesh;
}

Vec3 bounding_box(const VoxelGrid& g) {
  require(!g.occupied.empty(), ErrorCode::invalid, "bounding_box: empty grid");
  Vec3i lo = g.occupied.front(), hi = g.occupied.front();
  for (const Vec3i& v : g.occupied) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return g.resolution * (hi - lo + Vec3i::Ones()).cast<double>();
}

void mesh_bounds(const TriangleMesh& m, Vec3& lo, Vec3& hi) {
  require(!m.vertices.empty(), ErrorCode::invalid, "mesh_bounds: empty mesh");
  lo = hi = m.vertices.front();
  for (const Vec3& v : m.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
}

}  // namespace b3d
