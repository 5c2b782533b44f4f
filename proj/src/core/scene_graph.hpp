#pragma once

#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "core/geometry.hpp"
#include "core/rng.hpp"

namespace b3d {

// An element of the object library. Voxel-learned models carry their grid;
// the table is mesh-backed (thin box) and has an empty grid.
struct ObjectModel {
  int id = -1;
  VoxelGrid grid;
  TriangleMesh mesh;
  Vec3 aabb_min = Vec3::Zero();
  Vec3 aabb_max = Vec3::Zero();

  Vec3 extents() const { return aabb_max - aabb_min; }

  static ObjectModel from_grid(int id, VoxelGrid grid);
  // Box of the given top-surface extents with the top plane at z = 0.
  static ObjectModel table(double width, double height, double thickness = 0.01);
};

TriangleMesh make_box_mesh(const Vec3& lo, const Vec3& hi);

// Planar placement relative to the table corner plus rotation about the
// table normal. Valid ranges depend on the object's face-down footprint.
struct ContactParams {
  double dx = 0;
  double dy = 0;
  double dtheta = 0;  // radians in [0, 2*pi)
};

struct SceneChild {
  std::shared_ptr<const ObjectModel> object;
  int face = 1;  // 1..6 = (-z, +z, -x, +x, -y, +y) pressed against the table
  ContactParams contact;
};

struct SceneGraph {
  std::shared_ptr<const ObjectModel> table;  // pose fixed to identity
  std::vector<SceneChild> children;
};

using Library = std::vector<std::shared_ptr<const ObjectModel>>;

// Canonical rotation pressing the chosen bounding-box face down (-z).
Quat face_rotation(int face);

// Model-frame AABB corners mapped through the face rotation.
void rotated_bounds(const ObjectModel& obj, int face, Vec3& lo, Vec3& hi);

// Axis-aligned footprint (x, y extents) of the object with `face` down, at
// dtheta = 0. This is the footprint the prior denominator uses.
Eigen::Vector2d footprint(const ObjectModel& obj, int face);

// World pose placing the chosen face flush on the table top plane, the
// dtheta=0 footprint corner at (dx, dy) from the table corner, then rotated
// dtheta about the vertical axis through the footprint center.
Pose contact_to_pose(const ObjectModel& table, const ObjectModel& obj, int face,
                     const ContactParams& cp);

// Sum over children of log[(1/library_size)(1/6)(1/(W-w))(1/(H-h))(1/2pi)];
// -inf if any child violates its range constraints.
double scene_prior_logpdf(const SceneGraph& scene, std::size_t library_size);

SceneGraph sample_scene_prior(Rng& rng, int n, const Library& library,
                              std::shared_ptr<const ObjectModel> table);

// Scene config JSON: {"table": {"width", "height" [, "thickness"]},
//                     "children": [{"object_id", "face", "dx", "dy", "dtheta"}]}
nlohmann::json scene_to_json(const SceneGraph& scene);
SceneGraph scene_from_json(const nlohmann::json& j, const Library& library);

// Manifest JSON: {"models": [{"id": <dense 0-based>, "path": "<svox>"}]}.
// Paths are resolved relative to the manifest's directory.
Library load_library(const std::string& manifest_path);

}  // namespace b3d
