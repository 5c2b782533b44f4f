#pragma once

#include <vector>

#include "core/generative.hpp"
#include "core/geometry.hpp"
#include "core/likelihood.hpp"
#include "core/rng.hpp"
#include "core/scene_graph.hpp"

namespace b3d {

struct PoseError {
  double position_cm = 0;
  double orientation_deg = 0;
};

// position: 100 * |t_est - t_gt|; orientation: geodesic rotation angle.
PoseError pose_error(const Pose& est, const Pose& gt);

// Per-frame grid search around the previous estimate, in the camera's
// (distance, azimuth, altitude) parametrization. Each stage evaluates a
// points_per_dim^3 lattice over the current extent, keeps the MAP point,
// then shrinks the extent by refine_factor.
struct TrackSearch {
  double pos_extent = 0.03;               // +- meters on distance
  double angle_extent = 0.17453292519943295;  // +- radians (10 deg) on az/alt
  int points_per_dim = 5;
  int refine_stages = 2;
  double refine_factor = 3.0;
  int beam_width = 1;  // >1 keeps several hypotheses per frame

  void validate() const;
};

struct TrackState {
  std::vector<Pose> poses;       // one per frame; frame 0 is the given pose
  std::vector<double> frame_ms;  // wall-clock per frame
};

// Frame-sequential camera tracking against a known scene; the first frame's
// pose is given. Scoring is the windowed likelihood with fixed noise
// parameters. Deterministic: no randomness, ties pick the lowest index.
TrackState track_camera(const std::vector<DepthImage>& frames,
                        const SceneGraph& scene, const ModelConfig& model,
                        const Pose& initial, const TrackSearch& search,
                        const NoiseParams& noise, int threads = 0);

struct OrbitParams {
  double distance = 0.9;
  double altitude = 0.6981317007977318;  // 40 deg
  double azimuth_start = 0;
  double sweep = 6.283185307179586476925287;
  double table_width = 0.5;
  double table_height = 0.5;
};

struct OrbitSequence {
  SceneGraph scene;
  std::vector<DepthImage> frames;
  std::vector<Pose> camera_poses;
};

// Synthetic sequence: the object rests at the table center and the camera
// sweeps azimuth uniformly (azimuth_start + i * sweep / n_frames) at fixed
// distance and altitude. Frames are corrupted via the observation sampler.
OrbitSequence generate_orbit_sequence(std::shared_ptr<const ObjectModel> object,
                                      const ModelConfig& model, int n_frames,
                                      const OrbitParams& orbit,
                                      const NoiseParams& noise, Rng& rng);

}  // namespace b3d
