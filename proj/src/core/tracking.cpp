#include "core/tracking.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "core/error.hpp"
#include "core/parallel.hpp"
#include "core/renderer.hpp"

namespace b3d {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kHalfPi = 1.5707963267948966;

struct Spherical {
  double distance, azimuth, altitude;
};

struct Candidate {
  Spherical coords;
  double score = kNegInf;
};

std::vector<double> lattice(double center, double extent, int n) {
  std::vector<double> out;
  out.reserve(n);
  if (n == 1) {
    out.push_back(center);
    return out;
  }
  for (int i = 0; i < n; ++i)
    out.push_back(center - extent + 2.0 * extent * i / (n - 1));
  return out;
}

}  // namespace

PoseError pose_error(const Pose& est, const Pose& gt) {
  PoseError err;
  err.position_cm = 100.0 * (est.translation - gt.translation).norm();
  err.orientation_deg =
      rotation_angle_between(est.rotation, gt.rotation) * 180.0 / 3.141592653589793;
  return err;
}

void TrackSearch::validate() const {
  require(pos_extent > 0 && angle_extent > 0, ErrorCode::invalid,
          "track search: extents must be positive");
  require(points_per_dim >= 2, ErrorCode::invalid,
          "track search: need at least 2 points per dimension");
  require(refine_stages >= 0 && refine_factor > 1, ErrorCode::invalid,
          "track search: bad refinement settings");
  require(beam_width >= 1, ErrorCode::invalid, "track search: beam width must be >= 1");
}

TrackState track_camera(const std::vector<DepthImage>& frames,
                        const SceneGraph& scene, const ModelConfig& model,
                        const Pose& initial, const TrackSearch& search,
                        const NoiseParams& noise, int threads) {
  require(!frames.empty(), ErrorCode::invalid, "track_camera: empty frame list");
  search.validate();
  const CameraIntrinsics& k = model.intrinsics;
  const SceneVolume vol = visible_volume(k);
  const std::vector<MeshInstance> instances = scene_instances(scene);

  TrackState state;
  state.poses.reserve(frames.size());
  state.frame_ms.reserve(frames.size());

  using Clock = std::chrono::steady_clock;
  auto frame_start = Clock::now();
  auto close_frame = [&] {
    const auto elapsed = Clock::now() - frame_start;
    const double ms =
        std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(elapsed)
            .count();
    state.frame_ms.push_back(std::max(ms, 1e-6));
    frame_start = Clock::now();
  };

  Spherical start{};
  require(camera_pose_to_spherical(initial, start.distance, start.azimuth,
                                   start.altitude, 1e-6),
          ErrorCode::invalid,
          "track_camera: initial pose must look at the origin with up = +z");
  state.poses.push_back(initial);
  close_frame();

  std::vector<Candidate> beam{{start, 0.0}};

  auto score_pose = [&](const ObservationCache& obs_cache, const Spherical& s,
                        double& score_out) -> bool {
    if (s.distance <= 0 || s.altitude <= 0 || s.altitude >= kHalfPi) return false;
    const Pose cam = camera_pose_from_spherical(s.distance, s.azimuth, s.altitude);
    const DepthImage rendered = render_instances(instances, cam, k);
    score_out = windowed_log_likelihood_multi(obs_cache, rendered, k, {noise}, vol,
                                              model.sigma_max, model.window,
                                              model.prefactor)[0];
    return true;
  };

  for (std::size_t f = 1; f < frames.size(); ++f) {
    const ObservationCache obs_cache = ObservationCache::build(frames[f], k);
    std::vector<Candidate> next_beam;

    for (const Candidate& seed : beam) {
      Spherical center = seed.coords;
      double pos_extent = search.pos_extent;
      double angle_extent = search.angle_extent;
      Candidate stage_best{center, kNegInf};

      for (int stage = 0; stage <= search.refine_stages; ++stage) {
        const auto distances = lattice(center.distance, pos_extent, search.points_per_dim);
        const auto azimuths = lattice(center.azimuth, angle_extent, search.points_per_dim);
        const auto altitudes = lattice(center.altitude, angle_extent, search.points_per_dim);

        std::vector<Spherical> grid;
        grid.reserve(distances.size() * azimuths.size() * altitudes.size());
        for (double d : distances)
          for (double az : azimuths)
            for (double alt : altitudes) grid.push_back({d, az, alt});

        std::vector<double> scores(grid.size(), kNegInf);
        parallel_for(grid.size(), threads, [&](std::size_t i) {
          double sc;
          if (score_pose(obs_cache, grid[i], sc)) scores[i] = sc;
        });

        std::size_t best = 0;
        for (std::size_t i = 1; i < scores.size(); ++i)
          if (scores[i] > scores[best]) best = i;
        require(std::isfinite(scores[best]), ErrorCode::numeric,
                "track_camera: every candidate pose scored -inf");

        center = grid[best];
        stage_best = {center, scores[best]};
        if (search.beam_width > 1 && stage == search.refine_stages) {
          // keep the top alternatives from the final lattice
          std::vector<std::size_t> order(grid.size());
          for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
          std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return scores[a] > scores[b];
          });
          const std::size_t keep =
              std::min<std::size_t>(search.beam_width, order.size());
          for (std::size_t i = 0; i < keep; ++i)
            next_beam.push_back({grid[order[i]], scores[order[i]]});
        }
        pos_extent /= search.refine_factor;
        angle_extent /= search.refine_factor;
      }
      if (search.beam_width == 1) next_beam.push_back(stage_best);
    }

    std::stable_sort(next_beam.begin(), next_beam.end(),
                     [](const Candidate& a, const Candidate& b) {
                       return a.score > b.score;
                     });
    if (next_beam.size() > static_cast<std::size_t>(search.beam_width))
      next_beam.resize(search.beam_width);
    beam = std::move(next_beam);

    const Spherical& top = beam.front().coords;
    state.poses.push_back(
        camera_pose_from_spherical(top.distance, top.azimuth, top.altitude));
    close_frame();
  }
  return state;
}

OrbitSequence generate_orbit_sequence(std::shared_ptr<const ObjectModel> object,
                                      const ModelConfig& model, int n_frames,
                                      const OrbitParams& orbit,
                                      const NoiseParams& noise, Rng& rng) {
  require(n_frames >= 1, ErrorCode::invalid, "orbit: n_frames must be >= 1");
  OrbitSequence seq;
  seq.scene.table = std::make_shared<ObjectModel>(
      ObjectModel::table(orbit.table_width, orbit.table_height));

  SceneChild child;
  child.object = std::move(object);
  child.face = 1;
  const Eigen::Vector2d fp = footprint(*child.object, child.face);
  require(orbit.table_width > fp.x() && orbit.table_height > fp.y(),
          ErrorCode::invalid, "orbit: object footprint exceeds table");
  child.contact.dx = (orbit.table_width - fp.x()) / 2;
  child.contact.dy = (orbit.table_height - fp.y()) / 2;
  child.contact.dtheta = 0;
  seq.scene.children.push_back(child);

  seq.frames.reserve(n_frames);
  seq.camera_poses.reserve(n_frames);
  for (int i = 0; i < n_frames; ++i) {
    const double az = orbit.azimuth_start + orbit.sweep * i / n_frames;
    const Pose cam = camera_pose_from_spherical(orbit.distance, az, orbit.altitude);
    const DepthImage rendered = render_depth(seq.scene, cam, model.intrinsics);
    Rng frame_rng = rng.split(0x0f, static_cast<std::uint64_t>(i));
    seq.frames.push_back(
        sample_observation(rendered, model.intrinsics, noise, frame_rng));
    seq.camera_poses.push_back(cam);
  }
  return seq;
}

}  // namespace b3d
