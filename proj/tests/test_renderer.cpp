#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/generative.hpp"
#include "core/renderer.hpp"
#include "core/rng.hpp"
#include "core/scene_graph.hpp"
#include "support/oracles.hpp"
#include "support/shapes.hpp"

using namespace b3d;

namespace {
constexpr double kPi = 3.141592653589793238462643;

CameraIntrinsics square_k(int res, double fov_deg = 60.0, double near = 0.1,
                          double far = 5.0) {
  CameraIntrinsics k;
  k.width = k.height = res;
  k.fx = k.fy = res / (2.0 * std::tan(fov_deg * kPi / 360.0));
  k.cx = k.cy = (res - 1) / 2.0;
  k.near = near;
  k.far = far;
  return k;
}

SceneGraph random_scene(Rng& rng, const Library& library, int n_objects,
                        std::shared_ptr<const ObjectModel> table) {
  return sample_scene_prior(rng, n_objects, library, std::move(table));
}

}  // namespace

TEST_CASE("empty scene renders all sentinel") {
  const CameraIntrinsics k = square_k(16);
  const DepthImage img = render_instances({}, Pose::identity(), k);
  for (float z : img.depth) CHECK(z == static_cast<float>(k.far));
}

TEST_CASE("unit cube face-on: central pixel hits the front face at 1.5 m") {
  // cube [-0.5, 0.5]^2 x [1.5, 2.5] seen from the origin looking +z
  const TriangleMesh cube = make_box_mesh(Vec3(-0.5, -0.5, 1.5), Vec3(0.5, 0.5, 2.5));
  CameraIntrinsics k = square_k(33);
  const std::vector<MeshInstance> instances{{&cube, Pose::identity()}};
  const DepthImage img = render_instances(instances, Pose::identity(), k);
  const std::uint32_t c = 16;  // cx = cy = 16.0
  CHECK(img.at(c, c) == doctest::Approx(1.5).epsilon(1e-6));

  // ray-box oracle agrees
  const DepthImage oracle = test::raycast_depth(instances, Pose::identity(), k);
  CHECK(oracle.at(c, c) == doctest::Approx(1.5).epsilon(1e-6));
}

TEST_CASE("rasterizer matches the ray-cast oracle away from edges") {
  Rng rng(42);
  auto table = std::make_shared<ObjectModel>(ObjectModel::table(0.5, 0.5));
  Library library{test::make_model(0, test::lblock_grid(0.015)),
                  test::make_model(1, test::mug_grid(0.012))};
  const CameraIntrinsics k = square_k(32);

  for (int trial = 0; trial < 5; ++trial) {
    Rng srng = rng.split(trial);
    const SceneGraph scene = random_scene(srng, library, 1, table);
    const Pose camera = camera_pose_from_spherical(
        srng.uniform(0.7, 1.1), srng.uniform(0.0, 2 * kPi), srng.uniform(0.5, 1.0));
    const DepthImage img = render_depth(scene, camera, k);
    const DepthImage oracle =
        test::raycast_depth(scene_instances(scene), camera, k);
    const std::vector<bool> edges = test::edge_mask(oracle, k);

    std::size_t checked = 0, matched = 0;
    for (std::size_t i = 0; i < img.depth.size(); ++i) {
      if (edges[i]) continue;
      ++checked;
      if (std::abs(img.depth[i] - oracle.depth[i]) < 1e-5) ++matched;
    }
    REQUIRE(checked > 0);
    CHECK(static_cast<double>(matched) / checked >= 0.99);
  }
}

TEST_CASE("near-plane clipping matches the oracle") {
  // a big triangle piercing the near plane
  TriangleMesh tri;
  tri.vertices = {Vec3(-2.0, 0.5, -1.0), Vec3(2.0, 0.5, 3.0), Vec3(0.0, -1.5, 1.5)};
  tri.triangles = {{0, 1, 2}};
  const CameraIntrinsics k = square_k(48);
  const std::vector<MeshInstance> instances{{&tri, Pose::identity()}};
  const DepthImage img = render_instances(instances, Pose::identity(), k);
  const DepthImage oracle = test::raycast_depth(instances, Pose::identity(), k);
  const std::vector<bool> edges = test::edge_mask(oracle, k);

  std::size_t bad = 0, checked = 0;
  for (std::size_t i = 0; i < img.depth.size(); ++i) {
    if (edges[i]) continue;
    ++checked;
    if (std::abs(img.depth[i] - oracle.depth[i]) > 1e-5) ++bad;
  }
  REQUIRE(checked > 100);
  CHECK(bad == 0);
}

TEST_CASE("render_batch equals sequential renders bitwise") {
  Rng rng(7);
  auto table = std::make_shared<ObjectModel>(ObjectModel::table(0.5, 0.5));
  Library library{test::make_model(0, test::box_grid(4, 3, 2, 0.02))};
  const CameraIntrinsics k = square_k(25);

  std::vector<SceneGraph> scenes;
  std::vector<RenderHypothesis> hyps;
  for (int i = 0; i < 64; ++i) {
    Rng srng = rng.split(i);
    scenes.push_back(random_scene(srng, library, 1, table));
  }
  std::vector<Pose> cameras;
  for (int i = 0; i < 64; ++i) {
    Rng srng = rng.split(1000 + i);
    cameras.push_back(camera_pose_from_spherical(srng.uniform(0.6, 1.2),
                                                 srng.uniform(0.0, 2 * kPi),
                                                 srng.uniform(0.4, 1.1)));
  }
  for (int i = 0; i < 64; ++i) hyps.push_back({&scenes[i], cameras[i]});

  const std::vector<DepthImage> batch1 = render_batch(hyps, k, 1);
  const std::vector<DepthImage> batch8 = render_batch(hyps, k, 8);
  for (int i = 0; i < 64; ++i) {
    const DepthImage seq = render_depth(scenes[i], cameras[i], k);
    REQUIRE(batch1[i].depth.size() == seq.depth.size());
    for (std::size_t px = 0; px < seq.depth.size(); ++px) {
      CHECK(batch1[i].depth[px] == seq.depth[px]);
      CHECK(batch8[i].depth[px] == seq.depth[px]);
    }
  }
}

TEST_CASE("determinism: repeated renders are bitwise identical") {
  auto table = std::make_shared<ObjectModel>(ObjectModel::table(0.5, 0.5));
  Library library{test::make_model(0, test::mug_grid(0.012))};
  Rng rng(3);
  const SceneGraph scene = random_scene(rng, library, 1, table);
  const Pose camera = camera_pose_from_spherical(0.9, 1.1, 0.8);
  const CameraIntrinsics k = square_k(40);
  const DepthImage a = render_depth(scene, camera, k);
  const DepthImage b = render_depth(scene, camera, k);
  for (std::size_t i = 0; i < a.depth.size(); ++i) CHECK(a.depth[i] == b.depth[i]);
}

TEST_CASE("occlusion monotonicity: adding an object never increases depth") {
  Rng rng(19);
  auto table = std::make_shared<ObjectModel>(ObjectModel::table(0.5, 0.5));
  Library library{test::make_model(0, test::box_grid(5, 5, 5, 0.02)),
                  test::make_model(1, test::lblock_grid(0.02))};
  const CameraIntrinsics k = square_k(32);

  for (int trial = 0; trial < 20; ++trial) {
    Rng srng = rng.split(trial);
    SceneGraph two = random_scene(srng, library, 2, table);
    SceneGraph one;
    one.table = two.table;
    one.children = {two.children[0]};
    const Pose camera = camera_pose_from_spherical(
        srng.uniform(0.7, 1.2), srng.uniform(0.0, 2 * kPi), srng.uniform(0.5, 1.0));
    const DepthImage base = render_depth(one, camera, k);
    const DepthImage more = render_depth(two, camera, k);
    for (std::size_t i = 0; i < base.depth.size(); ++i)
      CHECK(more.depth[i] <= base.depth[i]);
  }
}

TEST_CASE("camera equivariance under rigid world transforms") {
  Rng rng(23);
  const TriangleMesh box = make_box_mesh(Vec3(-0.05, -0.04, 0.0), Vec3(0.05, 0.04, 0.09));
  const CameraIntrinsics k = square_k(32);

  for (int trial = 0; trial < 5; ++trial) {
    Rng srng = rng.split(trial);
    const Pose camera = camera_pose_from_spherical(
        srng.uniform(0.5, 1.0), srng.uniform(0.0, 2 * kPi), srng.uniform(0.4, 1.0));
    const Pose object = Pose::from_axis_angle(
        Vec3(srng.normal(), srng.normal(), srng.normal()).normalized(),
        srng.uniform(0, kPi), Vec3(srng.uniform(-0.1, 0.1), srng.uniform(-0.1, 0.1), 0));
    const Pose world_T = Pose::from_axis_angle(
        Vec3(srng.normal(), srng.normal(), srng.normal()).normalized(),
        srng.uniform(0, kPi), Vec3(0.4, -0.2, 0.7));

    const DepthImage a =
        render_instances({{&box, object}}, camera, k);
    const DepthImage b = render_instances({{&box, compose(world_T, object)}},
                                          compose(world_T, camera), k);
    std::size_t mismatched = 0;
    for (std::size_t i = 0; i < a.depth.size(); ++i)
      if (std::abs(a.depth[i] - b.depth[i]) > 1e-5) ++mismatched;
    CHECK(mismatched <= a.depth.size() / 100);
  }
}

TEST_CASE("shared triangle edges are covered exactly once") {
  Rng rng(31);
  const CameraIntrinsics k = square_k(24);
  for (int trial = 0; trial < 50; ++trial) {
    Rng srng = rng.split(trial);
    // random convex planar quad at fixed depth, split along a diagonal
    Vec3 verts[4];
    const double z = srng.uniform(0.5, 2.0);
    const double cx = srng.uniform(-0.2, 0.2), cy = srng.uniform(-0.2, 0.2);
    const double rad = srng.uniform(0.05, 0.4);  // circle => convex
    for (int i = 0; i < 4; ++i) {
      const double ang = kPi / 2 * i + srng.uniform(0.05, kPi / 2 - 0.05);
      verts[i] = Vec3(cx + rad * std::cos(ang), cy + rad * std::sin(ang), z);
    }
    TriangleMesh t1, t2;
    t1.vertices = {verts[0], verts[1], verts[2]};
    t1.triangles = {{0, 1, 2}};
    t2.vertices = {verts[0], verts[2], verts[3]};
    t2.triangles = {{0, 1, 2}};

    const DepthImage a = render_instances({{&t1, Pose::identity()}}, Pose::identity(), k);
    const DepthImage b = render_instances({{&t2, Pose::identity()}}, Pose::identity(), k);
    const float sentinel = static_cast<float>(k.far);
    for (std::size_t i = 0; i < a.depth.size(); ++i) {
      const bool in_a = a.depth[i] < sentinel;
      const bool in_b = b.depth[i] < sentinel;
      CHECK(!(in_a && in_b));  // no pixel covered by both halves
    }
  }
}
