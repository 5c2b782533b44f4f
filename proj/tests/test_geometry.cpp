#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "core/error.hpp"
#include "core/geometry.hpp"
#include "core/rng.hpp"
#include "support/oracles.hpp"

using namespace b3d;

namespace {
constexpr double kPi = 3.141592653589793238462643;

CameraIntrinsics tiny_intrinsics(std::uint32_t w, std::uint32_t h, double fx,
                                 double fy, double cx, double cy) {
  CameraIntrinsics k;
  k.fx = fx;
  k.fy = fy;
  k.cx = cx;
  k.cy = cy;
  k.width = w;
  k.height = h;
  k.near = 0.01;
  k.far = 10.0;
  return k;
}
}  // namespace

TEST_CASE("compose identity and inverse") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Pose p = Pose::from_axis_angle(
        Vec3(rng.normal(), rng.normal(), rng.normal()).normalized(),
        rng.uniform(-kPi, kPi),
        Vec3(rng.normal(), rng.normal(), rng.normal()));
    const Pose left = compose(Pose::identity(), p);
    CHECK(rotation_angle_between(left.rotation, p.rotation) < 1e-12);
    CHECK((left.translation - p.translation).norm() < 1e-12);

    const Pose round = compose(p, inverse(p));
    CHECK(rotation_angle_between(round.rotation, Quat::Identity()) < 1e-9);
    CHECK(round.translation.norm() < 1e-9);
    CHECK(std::abs(round.rotation.norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("compose matches rotation-matrix multiplication oracle") {
  const Pose a = Pose::rot_z(kPi / 2);
  const Pose b = Pose::rot_z(kPi / 2);
  const Pose ab = compose(a, b);

  const auto ma = test::quat_to_matrix(a.rotation.w(), a.rotation.x(),
                                       a.rotation.y(), a.rotation.z());
  const auto mb = test::quat_to_matrix(b.rotation.w(), b.rotation.x(),
                                       b.rotation.y(), b.rotation.z());
  const auto mab = test::matmul3(ma, mb);
  const Mat3 got = ab.rotation_matrix();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(got(i, j) == doctest::Approx(mab[3 * i + j]).epsilon(1e-12));

  // and rotZ(90)+rotZ(90) is rotZ(180)
  const Pose expected = Pose::rot_z(kPi);
  CHECK(rotation_angle_between(ab.rotation, expected.rotation) < 1e-12);

  // random-pose composition against the oracle
  Rng rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    const Pose p = Pose::from_axis_angle(
        Vec3(rng.normal(), rng.normal(), rng.normal()).normalized(),
        rng.uniform(-kPi, kPi));
    const Pose q = Pose::from_axis_angle(
        Vec3(rng.normal(), rng.normal(), rng.normal()).normalized(),
        rng.uniform(-kPi, kPi));
    const auto mp = test::quat_to_matrix(p.rotation.w(), p.rotation.x(),
                                         p.rotation.y(), p.rotation.z());
    const auto mq = test::quat_to_matrix(q.rotation.w(), q.rotation.x(),
                                         q.rotation.y(), q.rotation.z());
    const auto mpq = test::matmul3(mp, mq);
    const Mat3 gotm = compose(p, q).rotation_matrix();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(gotm(i, j) == doctest::Approx(mpq[3 * i + j]).epsilon(1e-10));
  }
}

TEST_CASE("depth_to_cloud pinhole backprojection") {
  SUBCASE("principal-point ray") {
    DepthImage img = DepthImage::constant(1, 1, 2.0f);
    const CameraIntrinsics k = tiny_intrinsics(1, 1, 1, 1, 0, 0);
    const PointCloud cloud = depth_to_cloud(img, k);
    REQUIRE(cloud.points.size() == 1);
    CHECK((cloud.points[0] - Vec3(0, 0, 2)).norm() < 1e-12);
  }

  SUBCASE("all-sentinel image is empty") {
    const CameraIntrinsics k = tiny_intrinsics(4, 4, 5, 5, 2, 2);
    DepthImage img = DepthImage::constant(4, 4, static_cast<float>(k.far));
    CHECK(depth_to_cloud(img, k).points.empty());
  }

  SUBCASE("2x2 image matches hand-computed backprojection") {
    const CameraIntrinsics k = tiny_intrinsics(2, 2, 10.0, 20.0, 0.5, 1.0);
    DepthImage img = DepthImage::constant(2, 2, 0.0f);
    img.at(0, 0) = 1.0f;
    img.at(1, 0) = 2.0f;
    img.at(0, 1) = 3.0f;
    img.at(1, 1) = 4.0f;
    const PointCloud cloud = depth_to_cloud(img, k);
    REQUIRE(cloud.points.size() == 4);
    // (u - cx) z / fx, (v - cy) z / fy, row-major order
    CHECK((cloud.points[0] - Vec3(-0.5 * 1 / 10, -1.0 * 1 / 20, 1)).norm() < 1e-12);
    CHECK((cloud.points[1] - Vec3(0.5 * 2 / 10, -1.0 * 2 / 20, 2)).norm() < 1e-12);
    CHECK((cloud.points[2] - Vec3(-0.5 * 3 / 10, 0.0, 3)).norm() < 1e-12);
    CHECK((cloud.points[3] - Vec3(0.5 * 4 / 10, 0.0, 4)).norm() < 1e-12);
  }

  SUBCASE("dimension mismatch is an error") {
    DepthImage img = DepthImage::constant(2, 3, 1.0f);
    const CameraIntrinsics k = tiny_intrinsics(2, 2, 10, 10, 1, 1);
    CHECK_THROWS_AS(depth_to_cloud(img, k), Error);
  }
}

TEST_CASE("backprojection reprojects to pixel centers") {
  const CameraIntrinsics k = tiny_intrinsics(16, 12, 20.0, 25.0, 7.5, 5.5);
  Rng rng(3);
  DepthImage img = DepthImage::constant(16, 12, static_cast<float>(k.far));
  for (std::uint32_t v = 0; v < 12; ++v)
    for (std::uint32_t u = 0; u < 16; ++u)
      img.at(u, v) = static_cast<float>(rng.uniform(0.5, 5.0));
  const PointCloud cloud = depth_to_cloud(img, k);
  REQUIRE(cloud.points.size() == 16 * 12);
  std::size_t i = 0;
  for (std::uint32_t v = 0; v < 12; ++v) {
    for (std::uint32_t u = 0; u < 16; ++u, ++i) {
      const Vec3& p = cloud.points[i];
      CHECK(std::abs(k.fx * p.x() / p.z() + k.cx - u) < 1e-6);
      CHECK(std::abs(k.fy * p.y() / p.z() + k.cy - v) < 1e-6);
    }
  }
}

TEST_CASE("transform_cloud") {
  PointCloud cloud;
  cloud.points = {Vec3(1, 0, 0), Vec3(0.2, -0.4, 1.1)};

  SUBCASE("identity") {
    const PointCloud out = transform_cloud(cloud, Pose::identity());
    CHECK((out.points[0] - cloud.points[0]).norm() == 0.0);
  }

  SUBCASE("axis rotation") {
    const PointCloud out = transform_cloud(cloud, Pose::rot_z(kPi / 2));
    CHECK((out.points[0] - Vec3(0, 1, 0)).norm() < 1e-9);
  }

  SUBCASE("isometry on random clouds") {
    Rng rng(11);
    PointCloud big;
    for (int i = 0; i < 40; ++i)
      big.points.emplace_back(rng.normal(), rng.normal(), rng.normal());
    const Pose p = Pose::from_axis_angle(
        Vec3(rng.normal(), rng.normal(), rng.normal()).normalized(),
        rng.uniform(-kPi, kPi), Vec3(0.3, -0.2, 0.9));
    const PointCloud out = transform_cloud(big, p);
    REQUIRE(out.points.size() == big.points.size());
    for (std::size_t i = 0; i < big.points.size(); ++i) {
      for (std::size_t j = i + 1; j < big.points.size(); ++j) {
        const double before = (big.points[i] - big.points[j]).norm();
        const double after = (out.points[i] - out.points[j]).norm();
        CHECK(std::abs(before - after) < 1e-9);
      }
    }
  }
}

TEST_CASE("voxelize") {
  SUBCASE("one point, one voxel") {
    PointCloud c;
    c.points = {Vec3(0.123, -0.456, 0.789)};
    const VoxelGrid g = voxelize(c, 0.05);
    CHECK(g.occupied.size() == 1);
  }

  SUBCASE("duplicates collapse") {
    PointCloud c;
    c.points = {Vec3(0.101, 0.102, 0.103), Vec3(0.104, 0.101, 0.102)};
    CHECK(voxelize(c, 0.05).occupied.size() == 1);
  }

  SUBCASE("empty cloud is an error") {
    CHECK_THROWS_AS(voxelize(PointCloud{}, 0.05), Error);
  }

  SUBCASE("matches brute-force binning oracle") {
    Rng rng(5);
    PointCloud c;
    for (int i = 0; i < 100; ++i)
      c.points.emplace_back(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4),
                            rng.uniform(0.0, 0.3));
    const double res = 0.05;
    const VoxelGrid g = voxelize(c, res);
    // oracle computes its own origin with the same stated rule
    Vec3 lo = c.points.front();
    for (const Vec3& p : c.points) lo = lo.cwiseMin(p);
    Vec3 origin;
    for (int axis = 0; axis < 3; ++axis)
      origin[axis] = std::floor(lo[axis] / res) * res;
    CHECK((origin - g.origin).norm() < 1e-12);
    const std::vector<Vec3i> expected = test::brute_force_bin(c.points, res, origin);
    REQUIRE(g.occupied.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i)
      CHECK(g.occupied[i] == expected[i]);
  }

  SUBCASE("permutation invariant") {
    Rng rng(6);
    PointCloud c;
    for (int i = 0; i < 50; ++i)
      c.points.emplace_back(rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1));
    PointCloud shuffled = c;
    for (std::size_t i = shuffled.points.size(); i > 1; --i)
      std::swap(shuffled.points[i - 1], shuffled.points[rng.uniform_int(i)]);
    const VoxelGrid a = voxelize(c, 0.07);
    const VoxelGrid b = voxelize(shuffled, 0.07);
    REQUIRE(a.occupied.size() == b.occupied.size());
    for (std::size_t i = 0; i < a.occupied.size(); ++i)
      CHECK(a.occupied[i] == b.occupied[i]);
  }
}

namespace {

double mesh_area(const TriangleMesh& m) {
  double area = 0;
  for (const auto& t : m.triangles) {
    const Vec3 e1 = m.vertices[t[1]] - m.vertices[t[0]];
    const Vec3 e2 = m.vertices[t[2]] - m.vertices[t[0]];
    area += 0.5 * e1.cross(e2).norm();
  }
  return area;
}

// exposed faces by neighbor enumeration
std::size_t expected_faces(const VoxelGrid& g) {
  std::set<std::array<int, 3>> occ;
  for (const Vec3i& v : g.occupied) occ.insert({v.x(), v.y(), v.z()});
  const int offs[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                          {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
  std::size_t faces = 0;
  for (const auto& v : occ)
    for (const auto& o : offs)
      if (!occ.count({v[0] + o[0], v[1] + o[1], v[2] + o[2]})) ++faces;
  return faces;
}

}  // namespace

TEST_CASE("voxel_to_mesh") {
  SUBCASE("single voxel cube") {
    VoxelGrid g;
    g.resolution = 0.1;
    g.occupied = {Vec3i(0, 0, 0)};
    const TriangleMesh m = voxel_to_mesh(g);
    CHECK(m.triangles.size() == 12);
    CHECK(m.vertices.size() == 8);
    CHECK(mesh_area(m) == doctest::Approx(0.06).epsilon(1e-12));
  }

  SUBCASE("two adjacent voxels share a face") {
    VoxelGrid g;
    g.resolution = 0.1;
    g.occupied = {Vec3i(0, 0, 0), Vec3i(1, 0, 0)};
    const TriangleMesh m = voxel_to_mesh(g);
    CHECK(m.triangles.size() == 20);  // 2 * (12 - 2), from adjacency enumeration
    CHECK(expected_faces(g) * 2 == m.triangles.size());
  }

  SUBCASE("face count matches adjacency enumeration on random blobs") {
    Rng rng(9);
    for (int trial = 0; trial < 5; ++trial) {
      VoxelGrid g;
      g.resolution = 0.02;
      std::set<std::array<int, 3>> seen;
      for (int i = 0; i < 30; ++i) {
        const Vec3i v(static_cast<int>(rng.uniform_int(5)),
                      static_cast<int>(rng.uniform_int(5)),
                      static_cast<int>(rng.uniform_int(5)));
        if (seen.insert({v.x(), v.y(), v.z()}).second) g.occupied.push_back(v);
      }
      const TriangleMesh m = voxel_to_mesh(g);
      CHECK(m.triangles.size() == 2 * expected_faces(g));
      // no degenerate triangles
      for (const auto& t : m.triangles) {
        const Vec3 e1 = m.vertices[t[1]] - m.vertices[t[0]];
        const Vec3 e2 = m.vertices[t[2]] - m.vertices[t[0]];
        CHECK(e1.cross(e2).norm() > 1e-12);
      }
    }
  }

  SUBCASE("watertight for connected components") {
    // every edge shared by exactly two triangles
    auto check_watertight = [](const VoxelGrid& g) {
      const TriangleMesh m = voxel_to_mesh(g);
      std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_count;
      for (const auto& t : m.triangles) {
        for (int e = 0; e < 3; ++e) {
          std::uint32_t a = t[e], b = t[(e + 1) % 3];
          if (a > b) std::swap(a, b);
          edge_count[{a, b}] += 1;
        }
      }
      for (const auto& [edge, count] : edge_count) CHECK(count == 2);
    };
    VoxelGrid box;
    box.resolution = 0.01;
    for (int x = 0; x < 3; ++x)
      for (int y = 0; y < 2; ++y)
        for (int z = 0; z < 2; ++z) box.occupied.emplace_back(x, y, z);
    check_watertight(box);

    VoxelGrid ell;
    ell.resolution = 0.01;
    ell.occupied = {Vec3i(0, 0, 0), Vec3i(1, 0, 0), Vec3i(1, 1, 0), Vec3i(1, 1, 1)};
    check_watertight(ell);

    VoxelGrid ball;
    ball.resolution = 0.01;
    for (int x = -3; x <= 3; ++x)
      for (int y = -3; y <= 3; ++y)
        for (int z = -3; z <= 3; ++z)
          if (x * x + y * y + z * z <= 9) ball.occupied.emplace_back(x, y, z);
    check_watertight(ball);
  }
}

TEST_CASE("bounding_box") {
  SUBCASE("single voxel") {
    VoxelGrid g;
    g.resolution = 0.1;
    g.occupied = {Vec3i(4, -2, 7)};
    const Vec3 ext = bounding_box(g);
    CHECK((ext - Vec3(0.1, 0.1, 0.1)).norm() < 1e-12);
  }

  SUBCASE("2x1x3 block") {
    VoxelGrid g;
    g.resolution = 0.05;
    for (int x = 0; x < 2; ++x)
      for (int z = 0; z < 3; ++z) g.occupied.emplace_back(x, 0, z);
    const Vec3 ext = bounding_box(g);
    CHECK(ext.x() == doctest::Approx(0.10).epsilon(1e-12));
    CHECK(ext.y() == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(ext.z() == doctest::Approx(0.15).epsilon(1e-12));
  }

  SUBCASE("index-range oracle on an irregular grid") {
    Rng rng(21);
    VoxelGrid g;
    g.resolution = 0.013;
    std::set<std::array<int, 3>> seen;
    for (int i = 0; i < 60; ++i) {
      const Vec3i v(static_cast<int>(rng.uniform_int(9)) - 4,
                    static_cast<int>(rng.uniform_int(7)),
                    static_cast<int>(rng.uniform_int(5)) - 2);
      if (seen.insert({v.x(), v.y(), v.z()}).second) g.occupied.push_back(v);
    }
    Vec3i lo = g.occupied.front(), hi = g.occupied.front();
    for (const Vec3i& v : g.occupied) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    const Vec3 ext = bounding_box(g);
    for (int axis = 0; axis < 3; ++axis)
      CHECK(ext[axis] ==
            doctest::Approx(g.resolution * (hi[axis] - lo[axis] + 1)).epsilon(1e-12));
  }

  SUBCASE("empty grid errors") { CHECK_THROWS_AS(bounding_box(VoxelGrid{}), Error); }
}
