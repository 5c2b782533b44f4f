#pragma once

// Independent reference implementations used as test oracles. Nothing here
// may call into the implementation paths it is used to check.

#include <array>
#include <vector>

#include "core/geometry.hpp"
#include "core/likelihood.hpp"
#include "core/renderer.hpp"
#include "core/rng.hpp"

namespace b3d::test {

// Per-pixel brute-force ray casting (Moller-Trumbore over every triangle);
// nearest camera-frame z within [near, far], sentinel otherwise.
DepthImage raycast_depth(const std::vector<MeshInstance>& instances,
                         const Pose& camera, const CameraIntrinsics& k);

// Pixels adjacent to a depth discontinuity or coverage boundary in `img`
// (8-neighborhood range > threshold), where rasterizer and ray caster may
// legitimately disagree.
std::vector<bool> edge_mask(const DepthImage& img, const CameraIntrinsics& k,
                            double threshold = 1e-3);

// Eq-style mixture likelihood evaluated with an independent double loop.
double naive_full_loglik(const std::vector<Vec3>& obs, const std::vector<Vec3>& rend,
                         const NoiseParams& np, double volume, double sigma_max,
                         bool printed_prefactor = true);

// Windowed variant: masked double loop over rendered pixels.
double naive_windowed_loglik(const DepthImage& obs, const DepthImage& rend,
                             const CameraIntrinsics& k, const NoiseParams& np,
                             double volume, double sigma_max, int window,
                             bool printed_prefactor = true);

// Quaternion-to-matrix and 3x3 multiplication written out longhand, for
// checking rotation composition against matrix composition.
std::array<double, 9> quat_to_matrix(double w, double x, double y, double z);
std::array<double, 9> matmul3(const std::array<double, 9>& a,
                              const std::array<double, 9>& b);

// Brute-force point binning at the given resolution (own floor logic).
std::vector<Vec3i> brute_force_bin(const std::vector<Vec3>& points, double res,
                                   const Vec3& origin);

// Kolmogorov-Smirnov statistic against U(0,1); input need not be sorted.
double ks_uniform_statistic(std::vector<double> values);

// Chi-square statistic of observed counts against a uniform distribution.
double chi_square_uniform(const std::vector<std::size_t>& counts);

// Best-Fisher von Mises sampler.
double sample_von_mises(double mu, double kappa, Rng& rng);

}  // namespace b3d::test
