#include "core/generative.hpp"

#include <cmath>

#include "core/error.hpp"

namespace b3d {

namespace {
constexpr double kTwoPi = 6.283185307179586476925287;
constexpr double kHalfPi = kTwoPi / 4.0;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0) a += kTwoPi;
  return a;
}

bool in_interval_circular(double value, double lo, double hi) {
  return (value >= lo && value <= hi) || (value + kTwoPi >= lo && value + kTwoPi <= hi) ||
         (value - kTwoPi >= lo && value - kTwoPi <= hi);
}

}  // namespace

void CameraPrior::validate() const {
  require(distance_lo > 0 && distance_hi >= distance_lo, ErrorCode::invalid,
          "camera prior: bad distance interval");
  require(azimuth_hi >= azimuth_lo && azimuth_hi - azimuth_lo <= kTwoPi,
          ErrorCode::invalid, "camera prior: bad azimuth interval");
  require(altitude_lo > 0 && altitude_hi >= altitude_lo && altitude_hi < kHalfPi,
          ErrorCode::invalid, "camera prior: altitude must lie within (0, pi/2)");
}

Pose camera_pose_from_spherical(double distance, double azimuth, double altitude) {
  require(distance > 0, ErrorCode::invalid, "camera distance must be positive");
  require(altitude > 0 && altitude < kHalfPi, ErrorCode::invalid,
          "camera altitude must lie within (0, pi/2)");
  const Vec3 position(distance * std::cos(altitude) * std::cos(azimuth),
                      distance * std::cos(altitude) * std::sin(azimuth),
                      distance * std::sin(altitude));
  const Vec3 forward = (-position).normalized();  // optical axis through origin
  // camera up (-y in camera frame) is world +z projected off the optical axis
  Vec3 up = Vec3::UnitZ() - Vec3::UnitZ().dot(forward) * forward;
  require(up.norm() > 1e-12, ErrorCode::invalid,
          "camera pose degenerate: looking along world z");
  up.normalize();
  const Vec3 down = -up;
  const Vec3 right = down.cross(forward);

  Mat3 rot;
  rot.col(0) = right;
  rot.col(1) = down;
  rot.col(2) = forward;
  Pose pose;
  pose.rotation = Quat(rot).normalized();
  pose.translation = position;
  return pose;
}

bool camera_pose_to_spherical(const Pose& pose, double& distance, double& azimuth,
                              double& altitude, double tol) {
  const Vec3& t = pose.translation;
  const double d = t.norm();
  if (d <= 0) return false;
  const double sin_alt = std::clamp(t.z() / d, -1.0, 1.0);
  const double alt = std::asin(sin_alt);
  if (alt <= 0 || alt >= kHalfPi) return false;
  const double az = wrap_angle(std::atan2(t.y(), t.x()));

  const Pose expected = camera_pose_from_spherical(d, az, alt);
  if ((expected.translation - t).norm() > tol * std::max(1.0, d)) return false;
  // quaternion component distance (~angle/2 for small angles) resolves far
  // below what the acos-based geodesic metric can
  const Quat& qa = expected.rotation;
  const Quat& qb = pose.rotation;
  const double qdist = std::min((qa.coeffs() - qb.coeffs()).norm(),
                                (qa.coeffs() + qb.coeffs()).norm());
  if (qdist > tol) return false;

  distance = d;
  azimuth = az;
  altitude = alt;
  return true;
}

Pose sample_camera_prior(const CameraPrior& prior, Rng& rng) {
  prior.validate();
  const double d = prior.distance_lo == prior.distance_hi
                       ? prior.distance_lo
                       : rng.uniform(prior.distance_lo, prior.distance_hi);
  const double az = prior.azimuth_lo == prior.azimuth_hi
                        ? prior.azimuth_lo
                        : rng.uniform(prior.azimuth_lo, prior.azimuth_hi);
  const double alt = prior.altitude_lo == prior.altitude_hi
                         ? prior.altitude_lo
                         : rng.uniform(prior.altitude_lo, prior.altitude_hi);
  return camera_pose_from_spherical(d, wrap_angle(az), alt);
}

double camera_prior_logpdf(const CameraPrior& prior, const Pose& pose) {
  prior.validate();
  double d, az, alt;
  if (!camera_pose_to_spherical(pose, d, az, alt)) return -INFINITY;

  double logp = 0.0;
  const double kPointTol = 1e-9;
  if (prior.distance_hi > prior.distance_lo) {
    if (d < prior.distance_lo || d > prior.distance_hi) return -INFINITY;
    logp -= std::log(prior.distance_hi - prior.distance_lo);
  } else if (std::abs(d - prior.distance_lo) > kPointTol) {
    return -INFINITY;
  }
  if (prior.azimuth_hi > prior.azimuth_lo) {
    if (!in_interval_circular(az, prior.azimuth_lo, prior.azimuth_hi))
      return -INFINITY;
    logp -= std::log(prior.azimuth_hi - prior.azimuth_lo);
  } else if (std::abs(az - wrap_angle(prior.azimuth_lo)) > kPointTol) {
    return -INFINITY;
  }
  if (prior.altitude_hi > prior.altitude_lo) {
    if (alt < prior.altitude_lo || alt > prior.altitude_hi) return -INFINITY;
    logp -= std::log(prior.altitude_hi - prior.altitude_lo);
  } else if (std::abs(alt - prior.altitude_lo) > kPointTol) {
    return -INFINITY;
  }
  return logp;
}

Trace sample_scene_model(int n, const Library& library,
                         std::shared_ptr<const ObjectModel> table,
                         const ModelConfig& model, Rng& rng) {
  Trace trace;
  trace.scene = sample_scene_prior(rng, n, library, std::move(table));
  trace.camera = sample_camera_prior(model.camera_prior, rng);
  trace.rendered = render_depth(trace.scene, trace.camera, model.intrinsics);
  trace.noise.p_outlier = rng.uniform();
  do {
    trace.noise.sigma_noise = rng.uniform(0.0, model.sigma_max);
  } while (trace.noise.sigma_noise <= 0.0);
  trace.observed = sample_observation(trace.rendered, model.intrinsics, trace.noise, rng);
  return trace;
}

double observation_loglik(const DepthImage& observed, const DepthImage& rendered,
                          const NoiseParams& noise, const ModelConfig& model) {
  if (noise.p_outlier < 0 || noise.p_outlier > 1) return -INFINITY;
  if (noise.sigma_noise <= 0 || noise.sigma_noise > model.sigma_max) return -INFINITY;
  const SceneVolume vol = visible_volume(model.intrinsics);
  if (model.windowed) {
    return windowed_log_likelihood(observed, rendered, model.intrinsics, noise, vol,
                                   model.sigma_max, model.window, model.prefactor);
  }
  const PointCloud obs_cloud = depth_to_cloud(observed, model.intrinsics);
  const PointCloud rend_cloud = depth_to_cloud(rendered, model.intrinsics);
  return full_log_likelihood(obs_cloud, rend_cloud, noise, vol, model.sigma_max,
                             model.prefactor);
}

double joint_logpdf(const Trace& trace, std::size_t library_size,
                    const ModelConfig& model) {
  const double scene_term = scene_prior_logpdf(trace.scene, library_size);
  if (!std::isfinite(scene_term)) return -INFINITY;
  const double camera_term = camera_prior_logpdf(model.camera_prior, trace.camera);
  if (!std::isfinite(camera_term)) return -INFINITY;
  const double obs_term =
      observation_loglik(trace.observed, trace.rendered, trace.noise, model);
  if (!std::isfinite(obs_term)) return -INFINITY;
  return scene_term + camera_term + obs_term;
}

}  // namespace b3d
