#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/renderer.hpp"
#include "core/rng.hpp"
#include "core/scene_graph.hpp"
#include "support/oracles.hpp"
#include "support/shapes.hpp"

using namespace b3d;

namespace {
constexpr double kPi = 3.141592653589793238462643;

CameraIntrinsics test_intrinsics(int res = 48) {
  CameraIntrinsics k;
  k.width = k.height = res;
  k.fx = k.fy = res / (2.0 * std::tan(kPi / 6));
  k.cx = k.cy = (res - 1) / 2.0;
  k.near = 0.1;
  k.far = 5.0;
  return k;
}
}  // namespace

TEST_CASE("contact_to_pose places objects flush on the table") {
  const ObjectModel table = ObjectModel::table(0.5, 0.5);
  // cube whose model frame sits at its center: half extent below z = 0
  const auto cube = test::make_model(0, test::centered_cube_grid(4, 0.02));
  const double half = 0.04;

  for (int face = 1; face <= 6; ++face) {
    const Pose pose = contact_to_pose(table, *cube, face, {0, 0, 0});
    // bottom flush: pose z-translation equals the half-extent of the pressed axis
    CHECK(pose.translation.z() == doctest::Approx(half).epsilon(1e-9));
    // dx=dy=0 puts the footprint corner at the table corner
    Vec3 lo, hi;
    rotated_bounds(*cube, face, lo, hi);
    CHECK(pose.translation.x() - (hi.x() - lo.x()) / 2 ==
          doctest::Approx(-0.25).epsilon(1e-9));
  }
}

TEST_CASE("dtheta = pi on a symmetric cube renders identically") {
  const auto cube = test::make_model(0, test::centered_cube_grid(4, 0.02));
  auto table = std::make_shared<ObjectModel>(ObjectModel::table(0.5, 0.5));
  const CameraIntrinsics k = test_intrinsics();
  const Pose camera = Pose::from_axis_angle(Vec3::UnitX(), kPi, Vec3(0, 0, 1.0));

  const Eigen::Vector2d fp = footprint(*cube, 1);
  const double dx = (0.5 - fp.x()) / 2, dy = (0.5 - fp.y()) / 2;

  SceneGraph a, b;
  a.table = b.table = table;
  a.children.push_back({cube, 1, {dx, dy, 0.0}});
  b.children.push_back({cube, 1, {dx, dy, kPi}});

  const DepthImage ia = render_depth(a, camera, k);
  const DepthImage ib = render_depth(b, camera, k);
  std::size_t diff = 0;
  for (std::size_t i = 0; i < ia.depth.size(); ++i)
    if (std::abs(ia.depth[i] - ib.depth[i]) > 1e-5) ++diff;
  // identical up to rasterization rounding at silhouette pixels
  CHECK(diff <= ia.depth.size() / 100);
}

TEST_CASE("face choice changes height by the bbox extent difference") {
  // asymmetric box: extents (0.06, 0.04, 0.02)
  const auto box = test::make_model(0, test::box_grid(6, 4, 2, 0.01));
  const ObjectModel table = ObjectModel::table(0.5, 0.5);

  auto top_height = [&](int face) {
    Vec3 lo, hi;
    rotated_bounds(*box, face, lo, hi);
    return hi.z() - lo.z();
  };
  // faces 3/4 press x down (height = x extent), faces 5/6 press y down
  CHECK(top_height(3) == doctest::Approx(0.06).epsilon(1e-12));
  CHECK(top_height(5) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(top_height(1) == doctest::Approx(0.02).epsilon(1e-12));

  // realized world heights match the bbox arithmetic oracle
  for (int face : {1, 3, 5}) {
    const Pose pose = contact_to_pose(table, *box, face, {0.01, 0.02, 0.3});
    double max_z = -1;
    for (const Vec3& v : box->mesh.vertices)
      max_z = std::max(max_z, pose.apply(v).z());
    CHECK(max_z == doctest::Approx(top_height(face)).epsilon(1e-9));
  }
}

TEST_CASE("scene_prior_logpdf") {
  auto table = std::make_shared<ObjectModel>(ObjectModel::table(1.0, 1.0));

  SUBCASE("empty scene has zero log-density") {
    SceneGraph scene;
    scene.table = table;
    CHECK(scene_prior_logpdf(scene, 5) == 0.0);
  }

  SUBCASE("near-zero footprint matches the closed form -log(12 pi)") {
    // library_size=1, 1x1 m table, footprint -> 0
    const auto dot = test::make_model(0, test::box_grid(1, 1, 1, 1e-7));
    SceneGraph scene;
    scene.table = table;
    scene.children.push_back({dot, 1, {0.1, 0.1, 1.0}});
    const double expected = -std::log(12.0 * kPi);
    CHECK(scene_prior_logpdf(scene, 1) == doctest::Approx(expected).epsilon(1e-5));
  }

  SUBCASE("per-child density uses face-dependent footprints") {
    const auto box = test::make_model(0, test::box_grid(6, 4, 2, 0.05));
    SceneGraph scene;
    scene.table = table;
    scene.children.push_back({box, 3, {0.1, 0.1, 0.5}});
    const Eigen::Vector2d fp = footprint(*box, 3);
    const double expected = -std::log(2.0) - std::log(6.0) -
                            std::log(1.0 - fp.x()) - std::log(1.0 - fp.y()) -
                            std::log(2 * kPi);
    CHECK(scene_prior_logpdf(scene, 2) == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("support violations give -inf") {
    const auto box = test::make_model(0, test::box_grid(2, 2, 2, 0.05));
    SceneGraph scene;
    scene.table = table;
    scene.children.push_back({box, 1, {2.0, 0.1, 0.0}});  // dx out of range
    CHECK(scene_prior_logpdf(scene, 1) == -INFINITY);
    scene.children[0].contact = {0.1, 0.1, 7.0};  // dtheta >= 2 pi
    CHECK(scene_prior_logpdf(scene, 1) == -INFINITY);
    // object wider than the table: empty support
    const auto wide = test::make_model(0, test::box_grid(30, 2, 2, 0.05));
    scene.children[0] = {wide, 1, {0.0, 0.1, 0.0}};
    CHECK(scene_prior_logpdf(scene, 1) == -INFINITY);
  }
}

TEST_CASE("sample_scene_prior") {
  auto table = std::make_shared<ObjectModel>(ObjectModel::table(0.6, 0.6));
  Library library{test::make_model(0, test::box_grid(3, 3, 3, 0.02)),
                  test::make_model(1, test::lblock_grid(0.02)),
                  test::make_model(2, test::box_grid(2, 5, 2, 0.02))};

  SUBCASE("n = 0 gives a table-only scene") {
    Rng rng(1);
    const SceneGraph scene = sample_scene_prior(rng, 0, library, table);
    CHECK(scene.children.empty());
  }

  SUBCASE("degenerate single-object library") {
    Rng rng(2);
    Library one{library[1]};
    const SceneGraph scene = sample_scene_prior(rng, 1, one, table);
    CHECK(scene.children[0].object->id == 1);
  }

  SUBCASE("samples always have finite prior density") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
      const SceneGraph scene = sample_scene_prior(rng, 2, library, table);
      CHECK(std::isfinite(scene_prior_logpdf(scene, library.size())));
    }
  }

  SUBCASE("object types are uniform (3-sigma multinomial)") {
    Rng rng(4);
    const int n = 10000;
    std::vector<std::size_t> counts(3, 0);
    for (int i = 0; i < n; ++i) {
      const SceneGraph scene = sample_scene_prior(rng, 1, library, table);
      counts[scene.children[0].object->id] += 1;
    }
    const double p = 1.0 / 3.0;
    const double bound = 3.0 * std::sqrt(p * (1 - p) / n);
    for (std::size_t c : counts)
      CHECK(std::abs(static_cast<double>(c) / n - p) < bound);
  }
}

TEST_CASE("prior integrates to one over a discretized support") {
  auto table = std::make_shared<ObjectModel>(ObjectModel::table(0.8, 0.7));
  Library library{test::make_model(0, test::box_grid(4, 3, 2, 0.02)),
                  test::make_model(1, test::box_grid(2, 2, 5, 0.02))};

  const int n_dx = 11, n_dy = 13, n_dth = 9;
  double total = 0;
  for (const auto& model : library) {
    for (int face = 1; face <= 6; ++face) {
      const Eigen::Vector2d fp = footprint(*model, face);
      const double dx_range = 0.8 - fp.x();
      const double dy_range = 0.7 - fp.y();
      REQUIRE(dx_range > 0);
      REQUIRE(dy_range > 0);
      const double cell =
          (dx_range / n_dx) * (dy_range / n_dy) * (2 * kPi / n_dth);
      for (int ix = 0; ix < n_dx; ++ix) {
        for (int iy = 0; iy < n_dy; ++iy) {
          for (int it = 0; it < n_dth; ++it) {
            SceneGraph scene;
            scene.table = table;
            scene.children.push_back(
                {model, face,
                 {dx_range * (ix + 0.5) / n_dx, dy_range * (iy + 0.5) / n_dy,
                  2 * kPi * (it + 0.5) / n_dth}});
            total += std::exp(scene_prior_logpdf(scene, library.size())) * cell;
          }
        }
      }
    }
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("contact_to_pose is continuous in the contact parameters") {
  const ObjectModel table = ObjectModel::table(0.5, 0.5);
  const auto block = test::make_model(0, test::lblock_grid(0.015));
  Rng rng(17);
  const double eps = 1e-6;
  for (int trial = 0; trial < 30; ++trial) {
    const int face = static_cast<int>(rng.uniform_int(6)) + 1;
    const Eigen::Vector2d fp = footprint(*block, face);
    ContactParams cp{rng.uniform(eps, 0.5 - fp.x() - eps),
                     rng.uniform(eps, 0.5 - fp.y() - eps), rng.uniform(0.1, 6.0)};
    const Pose base = contact_to_pose(table, *block, face, cp);
    for (int dim = 0; dim < 3; ++dim) {
      ContactParams perturbed = cp;
      (dim == 0 ? perturbed.dx : dim == 1 ? perturbed.dy : perturbed.dtheta) += eps;
      const Pose moved = contact_to_pose(table, *block, face, perturbed);
      CHECK((moved.translation - base.translation).norm() < 10.0 * eps);
    }
  }
}

TEST_CASE("scene JSON round trip") {
  Library library{test::make_model(0, test::box_grid(3, 3, 3, 0.02))};
  SceneGraph scene;
  scene.table = std::make_shared<ObjectModel>(ObjectModel::table(0.5, 0.4));
  scene.children.push_back({library[0], 4, {0.12, 0.07, 2.5}});
  const SceneGraph back = scene_from_json(scene_to_json(scene), library);
  CHECK(back.table->extents().x() == doctest::Approx(0.5));
  CHECK(back.table->extents().y() == doctest::Approx(0.4));
  REQUIRE(back.children.size() == 1);
  CHECK(back.children[0].face == 4);
  CHECK(back.children[0].contact.dx == doctest::Approx(0.12));
  CHECK(back.children[0].contact.dtheta == doctest::Approx(2.5));
}
