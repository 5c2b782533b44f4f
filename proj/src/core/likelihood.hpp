#pragma once

#include <vector>

#include "core/geometry.hpp"
#include "core/rng.hpp"

namespace b3d {

struct NoiseParams {
  double p_outlier = 0.5;   // in [0, 1]
  double sigma_noise = 0.01;  // meters, in (0, sigma_max]
};

struct SceneVolume {
  double v = 0;  // cubic meters
};

// Density prefactor of the likelihood: either the printed sigma/sigma_max
// form, or the flat 1/sigma_max a uniform prior on sigma would contribute.
enum class SigmaPrefactor { printed, uniform };

// Frustum volume between the near and far planes:
// (far^3 - near^3)/3 * (width/fx) * (height/fy).
SceneVolume visible_volume(const CameraIntrinsics& k);

// log(1/sigma_max) inside the support of the noise priors, -inf outside.
double joint_noise_prior_logpdf(const NoiseParams& np, double sigma_max);

// Forward observation model: each output point is, with probability
// p_outlier, uniform in the visible frustum, otherwise a uniformly chosen
// rendered point plus isotropic Gaussian noise. The cloud (same size as the
// rendered cloud) is reprojected to a depth image, nearest z per pixel.
DepthImage sample_observation(const DepthImage& rendered, const CameraIntrinsics& k,
                              const NoiseParams& np, Rng& rng);

// Exact mixture likelihood over clouds:
// prefactor + sum_i log[p/V + (1-p)/|y| * sum_j N3(obs_i; rend_j, sigma^2 I)].
double full_log_likelihood(const PointCloud& obs, const PointCloud& rendered,
                           const NoiseParams& np, const SceneVolume& vol,
                           double sigma_max,
                           SigmaPrefactor prefactor = SigmaPrefactor::printed);

// Windowed truncation of the same density: the inner sum for observed pixel
// (u,v) ranges over rendered pixels within a (2w+1)^2 window. The mixture
// weight keeps the global rendered point count. Sentinel observed pixels are
// skipped; sentinel rendered pixels contribute no Gaussian terms.
double windowed_log_likelihood(const DepthImage& obs, const DepthImage& rendered,
                               const CameraIntrinsics& k, const NoiseParams& np,
                               const SceneVolume& vol, double sigma_max, int window,
                               SigmaPrefactor prefactor = SigmaPrefactor::printed);

// Backprojected observed pixels, cached once per observation and reused when
// scoring many rendered hypotheses against it.
struct ObservationCache {
  std::uint32_t width = 0, height = 0;
  std::vector<Vec3> points;       // camera-frame, one per non-sentinel pixel
  std::vector<std::int32_t> index;  // per pixel: index into points, or -1

  static ObservationCache build(const DepthImage& obs, const CameraIntrinsics& k);
};

// Evaluates the windowed log-likelihood for several noise settings against
// one rendered image, sharing the per-pixel distance computations.
std::vector<double> windowed_log_likelihood_multi(
    const ObservationCache& obs, const DepthImage& rendered,
    const CameraIntrinsics& k, const std::vector<NoiseParams>& noise,
    const SceneVolume& vol, double sigma_max, int window,
    SigmaPrefactor prefactor = SigmaPrefactor::printed);

// Default window radius: 2 at 100 pixels, scaled proportionally.
int default_window(std::uint32_t width);

}  // namespace b3d
