#pragma once

#include "core/geometry.hpp"
#include "core/likelihood.hpp"
#include "core/renderer.hpp"
#include "core/rng.hpp"
#include "core/scene_graph.hpp"

namespace b3d {

// Uniform priors over spherical camera coordinates. The camera looks at the
// world origin with its up direction agreeing with world +z. Zero-length
// intervals clamp that coordinate.
struct CameraPrior {
  double distance_lo = 0.5, distance_hi = 1.5;
  double azimuth_lo = 0.0, azimuth_hi = 6.283185307179586476925287;
  double altitude_lo = 0.5235987755982988, altitude_hi = 1.0471975511965976;

  void validate() const;
};

// Camera-to-world pose at the given spherical coordinates, optical axis
// through the origin. Altitude must stay inside (0, pi/2).
Pose camera_pose_from_spherical(double distance, double azimuth, double altitude);

// Decomposes a pose into spherical coordinates and verifies the look-at and
// up constraints hold within tol. Returns false for poses off the manifold.
bool camera_pose_to_spherical(const Pose& pose, double& distance, double& azimuth,
                              double& altitude, double tol = 1e-9);

Pose sample_camera_prior(const CameraPrior& prior, Rng& rng);
double camera_prior_logpdf(const CameraPrior& prior, const Pose& pose);

// Model-level constants shared by the generative model and inference.
struct ModelConfig {
  CameraIntrinsics intrinsics;
  CameraPrior camera_prior;
  double sigma_max = 0.1;
  SigmaPrefactor prefactor = SigmaPrefactor::printed;
  bool windowed = true;
  int window = 2;
};

struct Trace {
  SceneGraph scene;
  Pose camera;
  NoiseParams noise;
  DepthImage rendered;  // exact render of (scene, camera)
  DepthImage observed;
};

// Runs the full forward model: scene prior, camera prior, render, noise
// priors, observation sampler.
Trace sample_scene_model(int n, const Library& library,
                         std::shared_ptr<const ObjectModel> table,
                         const ModelConfig& model, Rng& rng);

// Likelihood term of the joint: Eq-style mixture density of the observation
// given the stored render, windowed or full per the model configuration.
// Returns -inf when the noise parameters leave their support.
double observation_loglik(const DepthImage& observed, const DepthImage& rendered,
                          const NoiseParams& noise, const ModelConfig& model);

// scene prior + camera prior + observation likelihood; -inf on any support
// violation.
double joint_logpdf(const Trace& trace, std::size_t library_size,
                    const ModelConfig& model);

}  // namespace b3d
