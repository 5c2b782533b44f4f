#include "core/renderer.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/parallel.hpp"

namespace b3d {

namespace {

struct ScreenVertex {
  double u, v;   // continuous pixel coordinates; pixel centers at integers
  double inv_z;  // 1/z, camera frame
};

inline double edge_function(double ax, double ay, double bx, double by,
                            double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

// Edge function evaluated in a canonical endpoint order, so the two
// triangles sharing an edge obtain bitwise-negated values and a pixel on the
// shared edge is claimed by exactly one of them (top-left rule below).
struct EdgeFn {
  double ox, oy;      // canonical origin
  double cdx, cdy;    // canonical direction
  double sign;        // restores the directed orientation
  double dx, dy;      // directed deltas, for the fill rule

  double eval(double px, double py) const {
    return sign * (cdx * (py - oy) - cdy * (px - ox));
  }

  // Fill rule: a pixel exactly on an edge counts only for top edges
  // (dy == 0, dx > 0) and left edges (dy < 0), with y growing downward and
  // positive triangle orientation.
  bool covers(double e) const {
    if (e > 0) return true;
    if (e < 0) return false;
    return dy < 0 || (dy == 0 && dx > 0);
  }
};

EdgeFn make_edge(const ScreenVertex& a, const ScreenVertex& b) {
  const bool canonical = a.u < b.u || (a.u == b.u && a.v < b.v);
  const ScreenVertex& lo = canonical ? a : b;
  const ScreenVertex& hi = canonical ? b : a;
  EdgeFn e;
  e.ox = lo.u;
  e.oy = lo.v;
  e.cdx = hi.u - lo.u;
  e.cdy = hi.v - lo.v;
  e.sign = canonical ? 1.0 : -1.0;
  e.dx = b.u - a.u;
  e.dy = b.v - a.v;
  return e;
}

void raster_screen_triangle(DepthImage& img, const CameraIntrinsics& k,
                            ScreenVertex a, ScreenVertex b, ScreenVertex c) {
  double area2 = edge_function(a.u, a.v, b.u, b.v, c.u, c.v);
  if (area2 == 0) return;
  if (area2 < 0) {
    std::swap(b, c);
    area2 = -area2;
  }

  const int u_min = std::max(0, static_cast<int>(std::ceil(std::min({a.u, b.u, c.u}))));
  const int u_max = std::min(static_cast<int>(k.width) - 1,
                             static_cast<int>(std::floor(std::max({a.u, b.u, c.u}))));
  const int v_min = std::max(0, static_cast<int>(std::ceil(std::min({a.v, b.v, c.v}))));
  const int v_max = std::min(static_cast<int>(k.height) - 1,
                             static_cast<int>(std::floor(std::max({a.v, b.v, c.v}))));
  if (u_min > u_max || v_min > v_max) return;

  const EdgeFn ab = make_edge(a, b);
  const EdgeFn bc = make_edge(b, c);
  const EdgeFn ca = make_edge(c, a);
  const double inv_area2 = 1.0 / area2;
  const float far_f = static_cast<float>(k.far);
  const double near_z = k.near;

  for (int pv = v_min; pv <= v_max; ++pv) {
    float* row = img.depth.data() + static_cast<std::size_t>(pv) * k.width;
    for (int pu = u_min; pu <= u_max; ++pu) {
      const double px = pu, py = pv;
      const double e_ab = ab.eval(px, py);
      const double e_bc = bc.eval(px, py);
      const double e_ca = ca.eval(px, py);
      if (!ab.covers(e_ab) || !bc.covers(e_bc) || !ca.covers(e_ca)) continue;
      // perspective-correct depth: 1/z is affine in screen space
      const double inv_z =
          (e_bc * a.inv_z + e_ca * b.inv_z + e_ab * c.inv_z) * inv_area2;
      if (inv_z <= 0) continue;
      const double z = 1.0 / inv_z;
      if (z < near_z * (1.0 - 1e-12) || z > k.far) continue;
      const float zf = static_cast<float>(z);
      if (zf < row[pu] && zf < far_f) row[pu] = zf;
    }
  }
}

inline ScreenVertex project(const Vec3& p, const CameraIntrinsics& k) {
  const double inv_z = 1.0 / p.z();
  return {k.fx * p.x() * inv_z + k.cx, k.fy * p.y() * inv_z + k.cy, inv_z};
}

}  // namespace

void raster_mesh(DepthImage& img, const CameraIntrinsics& k,
                 const TriangleMesh& mesh, const Pose& model_to_camera) {
  require(img.width == k.width && img.height == k.height, ErrorCode::invalid,
          "raster_mesh: buffer dimensions do not match intrinsics");
  const Mat3 rot = model_to_camera.rotation_matrix();
  const Vec3& t = model_to_camera.translation;

  std::vector<Vec3> cam(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    cam[i] = rot * mesh.vertices[i] + t;

  const double near = k.near;
  for (const auto& tri : mesh.triangles) {
    const Vec3* v[3] = {&cam[tri[0]], &cam[tri[1]], &cam[tri[2]]};

    // clip against z = near (Sutherland-Hodgman, winding preserved)
    Vec3 poly[4];
    int n_poly = 0;
    for (int i = 0; i < 3; ++i) {
      const Vec3& cur = *v[i];
      const Vec3& nxt = *v[(i + 1) % 3];
      const bool cur_in = cur.z() >= near;
      const bool nxt_in = nxt.z() >= near;
      if (cur_in) poly[n_poly++] = cur;
      if (cur_in != nxt_in) {
        const double s = (near - cur.z()) / (nxt.z() - cur.z());
        poly[n_poly++] = cur + s * (nxt - cur);
      }
    }
    if (n_poly < 3) continue;

    const ScreenVertex s0 = project(poly[0], k);
    ScreenVertex prev = project(poly[1], k);
    for (int i = 2; i < n_poly; ++i) {
      const ScreenVertex cur = project(poly[i], k);
      raster_screen_triangle(img, k, s0, prev, cur);
      prev = cur;
    }
  }
}

std::vector<MeshInstance> scene_instances(const SceneGraph& scene) {
  std::vector<MeshInstance> instances;
  if (scene.table) instances.push_back({&scene.table->mesh, Pose::identity()});
  for (const SceneChild& child : scene.children) {
    instances.push_back({&child.object->mesh,
                         contact_to_pose(*scene.table, *child.object, child.face,
                                         child.contact)});
  }
  return instances;
}

DepthImage render_instances(const std::vector<MeshInstance>& instances,
                            const Pose& camera, const CameraIntrinsics& k) {
  k.validate();
  DepthImage img = DepthImage::constant(k.width, k.height, static_cast<float>(k.far));
  const Pose world_to_camera = inverse(camera);
  for (const MeshInstance& inst : instances) {
    if (!inst.mesh || inst.mesh->empty()) continue;
    raster_mesh(img, k, *inst.mesh, compose(world_to_camera, inst.model_to_world));
  }
  return img;
}

DepthImage render_depth(const SceneGraph& scene, const Pose& camera,
                        const CameraIntrinsics& k) {
  return render_instances(scene_instances(scene), camera, k);
}

std::vector<DepthImage> render_batch(const std::vector<RenderHypothesis>& hypotheses,
                                     const CameraIntrinsics& k, int threads) {
  require(!hypotheses.empty(), ErrorCode::invalid, "render_batch: empty batch");
  std::vector<DepthImage> out(hypotheses.size());
  parallel_for(hypotheses.size(), threads, [&](std::size_t i) {
    out[i] = render_depth(*hypotheses[i].scene, hypotheses[i].camera, k);
  });
  return out;
}

}  // namespace b3d
