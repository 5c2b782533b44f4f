#pragma once

#include <vector>

#include "core/geometry.hpp"
#include "core/scene_graph.hpp"

namespace b3d {

// A mesh placed in the world. Non-owning; the caller keeps the mesh alive.
struct MeshInstance {
  const TriangleMesh* mesh = nullptr;
  Pose model_to_world;
};

struct RenderHypothesis {
  const SceneGraph* scene = nullptr;
  Pose camera;  // camera-to-world
};

// Rasterizes one mesh into an existing depth buffer (nearest z wins, strict
// less-than so earlier triangles win ties). Triangles crossing z = near are
// clipped analytically; fragments outside [near, far] are discarded.
// Composing meshes one at a time into the same buffer is exactly equivalent
// to rendering them together.
void raster_mesh(DepthImage& img, const CameraIntrinsics& k,
                 const TriangleMesh& mesh, const Pose& model_to_camera);

// Table first, then children in order.
std::vector<MeshInstance> scene_instances(const SceneGraph& scene);

DepthImage render_instances(const std::vector<MeshInstance>& instances,
                            const Pose& camera, const CameraIntrinsics& k);

// Per-pixel nearest-intersection depth of the scene. Pixels covered by no
// triangle (or only beyond the far plane) carry the far sentinel.
DepthImage render_depth(const SceneGraph& scene, const Pose& camera,
                        const CameraIntrinsics& k);

// Element-wise identical to sequential render_depth calls; hypotheses are
// evaluated in parallel.
std::vector<DepthImage> render_batch(const std::vector<RenderHypothesis>& hypotheses,
                                     const CameraIntrinsics& k, int threads);

}  // namespace b3d
