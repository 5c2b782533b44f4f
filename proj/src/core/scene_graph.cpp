#include "core/scene_graph.hpp"

#include <cmath>
#include <filesystem>
#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/io.hpp"

namespace b3d {

namespace {
constexpr double kTwoPi = 6.283185307179586476925287;
}

ObjectModel ObjectModel::from_grid(int id, VoxelGrid grid) {
  require(!grid.occupied.empty(), ErrorCode::invalid, "object model: empty grid");
  ObjectModel m;
  m.id = id;
  m.grid = std::move(grid);
  m.mesh = voxel_to_mesh(m.grid);
  mesh_bounds(m.mesh, m.aabb_min, m.aabb_max);
  return m;
}

ObjectModel ObjectModel::table(double width, double height, double thickness) {
  require(width > 0 && height > 0 && thickness > 0, ErrorCode::invalid,
          "table: extents must be positive");
  ObjectModel m;
  m.id = -1;
  m.aabb_min = Vec3(-width / 2, -height / 2, -thickness);
  m.aabb_max = Vec3(width / 2, height / 2, 0.0);
  m.mesh = make_box_mesh(m.aabb_min, m.aabb_max);
  return m;
}

TriangleMesh make_box_mesh(const Vec3& lo, const Vec3& hi) {
  TriangleMesh mesh;
  mesh.vertices.reserve(8);
  for (int i = 0; i < 8; ++i) {
    mesh.vertices.emplace_back(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(),
                               i & 4 ? hi.z() : lo.z());
  }
  // quads per face, outward winding; vertex bit layout is (x=1, y=2, z=4)
  const std::uint32_t quads[6][4] = {
      {0, 4, 6, 2},  // -x
      {1, 3, 7, 5},  // +x
      {0, 1, 5, 4},  // -y
      {2, 6, 7, 3},  // +y
      {0, 2, 3, 1},  // -z
      {4, 5, 7, 6},  // +z
  };
  for (const auto& q : quads) {
    mesh.triangles.push_back({q[0], q[1], q[2]});
    mesh.triangles.push_back({q[0], q[2], q[3]});
  }
  return mesh;
}

Quat face_rotation(int face) {
  require(face >= 1 && face <= 6, ErrorCode::invalid, "face must be in 1..6");
  const double half_pi = kTwoPi / 4.0;
  switch (face) {
    case 1: return Quat::Identity();
    case 2: return Quat(Eigen::AngleAxisd(2 * half_pi, Vec3::UnitX()));
    case 3: return Quat(Eigen::AngleAxisd(-half_pi, Vec3::UnitY()));
    case 4: return Quat(Eigen::AngleAxisd(half_pi, Vec3::UnitY()));
    case 5: return Quat(Eigen::AngleAxisd(half_pi, Vec3::UnitX()));
    default: return Quat(Eigen::AngleAxisd(-half_pi, Vec3::UnitX()));
  }
}

void rotated_bounds(const ObjectModel& obj, int face, Vec3& lo, Vec3& hi) {
  const Mat3 rot = face_rotation(face).toRotationMatrix();
  bool first = true;
  for (int i = 0; i < 8; ++i) {
    const Vec3 corner(i & 1 ? obj.aabb_max.x() : obj.aabb_min.x(),
                      i & 2 ? obj.aabb_max.y() : obj.aabb_min.y(),
                      i & 4 ? obj.aabb_max.z() : obj.aabb_min.z());
    const Vec3 r = rot * corner;
    if (first) {
      lo = hi = r;
      first = false;
    } else {
      lo = lo.cwiseMin(r);
      hi = hi.cwiseMax(r);
    }
  }
}

Eigen::Vector2d footprint(const ObjectModel& obj, int face) {
  Vec3 lo, hi;
  rotated_bounds(obj, face, lo, hi);
  return {hi.x() - lo.x(), hi.y() - lo.y()};
}

Pose contact_to_pose(const ObjectModel& table, const ObjectModel& obj, int face,
                     const ContactParams& cp) {
  require(face >= 1 && face <= 6, ErrorCode::invalid, "face must be in 1..6");
  const double table_w = table.extents().x();
  const double table_h = table.extents().y();
  Vec3 lo, hi;
  rotated_bounds(obj, face, lo, hi);
  const double w = hi.x() - lo.x();
  const double h = hi.y() - lo.y();
  require(cp.dx >= 0 && cp.dx <= table_w - w && cp.dy >= 0 &&
              cp.dy <= table_h - h && cp.dtheta >= 0 && cp.dtheta < kTwoPi,
          ErrorCode::invalid, "contact params out of valid range");

  const Vec3 corner(-table_w / 2, -table_h / 2, 0.0);
  // face-down model AABB minimum lands on (corner + (dx, dy), table top)
  const Vec3 base_translation = corner + Vec3(cp.dx - lo.x(), cp.dy - lo.y(), -lo.z());
  // rotate about the vertical axis through the footprint center
  const Vec3 pivot = corner + Vec3(cp.dx + w / 2, cp.dy + h / 2, 0.0);

  const Quat spin(Eigen::AngleAxisd(cp.dtheta, Vec3::UnitZ()));
  Pose pose;
  pose.rotation = (spin * face_rotation(face)).normalized();
  pose.translation = spin * (base_translation - pivot) + pivot;
  return pose;
}

double scene_prior_logpdf(const SceneGraph& scene, std::size_t library_size) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (library_size == 0) return kNegInf;
  const double table_w = scene.table->extents().x();
  const double table_h = scene.table->extents().y();
  double logp = 0.0;
  for (const SceneChild& child : scene.children) {
    if (child.face < 1 || child.face > 6) return kNegInf;
    const Eigen::Vector2d fp = footprint(*child.object, child.face);
    const double dx_range = table_w - fp.x();
    const double dy_range = table_h - fp.y();
    if (dx_range <= 0 || dy_range <= 0) return kNegInf;
    const ContactParams& cp = child.contact;
    if (cp.dx < 0 || cp.dx > dx_range || cp.dy < 0 || cp.dy > dy_range ||
        cp.dtheta < 0 || cp.dtheta >= kTwoPi)
      return kNegInf;
    logp += -std::log(static_cast<double>(library_size)) - std::log(6.0) -
            std::log(dx_range) - std::log(dy_range) - std::log(kTwoPi);
  }
  return logp;
}

SceneGraph sample_scene_prior(Rng& rng, int n, const Library& library,
                              std::shared_ptr<const ObjectModel> table) {
  require(!library.empty(), ErrorCode::invalid, "sample_scene_prior: empty library");
  require(n >= 0, ErrorCode::invalid, "sample_scene_prior: n must be >= 0");
  SceneGraph scene;
  scene.table = std::move(table);
  const double table_w = scene.table->extents().x();
  const double table_h = scene.table->extents().y();
  for (int i = 0; i < n; ++i) {
    SceneChild child;
    child.object = library[rng.uniform_int(library.size())];
    child.face = static_cast<int>(rng.uniform_int(6)) + 1;
    const Eigen::Vector2d fp = footprint(*child.object, child.face);
    const double dx_range = table_w - fp.x();
    const double dy_range = table_h - fp.y();
    require(dx_range > 0 && dy_range > 0, ErrorCode::invalid,
            "sample_scene_prior: object footprint exceeds table extents");
    child.contact.dx = rng.uniform(0.0, dx_range);
    child.contact.dy = rng.uniform(0.0, dy_range);
    child.contact.dtheta = rng.uniform(0.0, kTwoPi);
    scene.children.push_back(std::move(child));
  }
  return scene;
}

Json scene_to_json(const SceneGraph& scene) {
  Json children = Json::array();
  for (const SceneChild& c : scene.children) {
    children.push_back({{"object_id", c.object->id},
                        {"face", c.face},
                        {"dx", c.contact.dx},
                        {"dy", c.contact.dy},
                        {"dtheta", c.contact.dtheta}});
  }
  const Vec3 ext = scene.table->extents();
  return Json{{"table", {{"width", ext.x()}, {"height", ext.y()}, {"thickness", ext.z()}}},
              {"children", children}};
}

SceneGraph scene_from_json(const Json& j, const Library& library) {
  require(j.contains("table"), ErrorCode::config, "scene JSON: missing 'table'");
  const Json& t = j.at("table");
  SceneGraph scene;
  try {
    const double thickness = t.value("thickness", 0.01);
    scene.table = std::make_shared<ObjectModel>(ObjectModel::table(
        t.at("width").get<double>(), t.at("height").get<double>(), thickness));
    for (const Json& cj : j.value("children", Json::array())) {
      SceneChild child;
      const int id = cj.at("object_id").get<int>();
      require(id >= 0 && static_cast<std::size_t>(id) < library.size(),
              ErrorCode::config, "scene JSON: object_id out of library range");
      child.object = library[id];
      child.face = cj.at("face").get<int>();
      child.contact.dx = cj.at("dx").get<double>();
      child.contact.dy = cj.at("dy").get<double>();
      child.contact.dtheta = cj.at("dtheta").get<double>();
      scene.children.push_back(std::move(child));
    }
  } catch (const Json::exception& e) {
    fail(ErrorCode::config, std::string("bad scene JSON: ") + e.what());
  }
  return scene;
}

Library load_library(const std::string& manifest_path) {
  const Json j = load_json_file(manifest_path);
  require(j.contains("models") && j.at("models").is_array(), ErrorCode::config,
          manifest_path + ": manifest requires a 'models' array");
  const auto base = std::filesystem::path(manifest_path).parent_path();
  const auto& models = j.at("models");
  Library library(models.size());
  for (const Json& mj : models) {
    int id = 0;
    std::string rel;
    try {
      id = mj.at("id").get<int>();
      rel = mj.at("path").get<std::string>();
    } catch (const Json::exception& e) {
      fail(ErrorCode::config, manifest_path + ": bad model entry: " + e.what());
    }
    require(id >= 0 && static_cast<std::size_t>(id) < library.size(),
            ErrorCode::config, manifest_path + ": model ids must be dense 0-based");
    require(!library[id], ErrorCode::config, manifest_path + ": duplicate model id");
    const auto path = base / rel;
    library[id] = std::make_shared<ObjectModel>(
        ObjectModel::from_grid(id, load_voxel_grid(path.string())));
  }
  return library;
}

}  // namespace b3d
