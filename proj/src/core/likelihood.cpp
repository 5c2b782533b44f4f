#include "core/likelihood.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace b3d {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

double log_prefactor(const NoiseParams& np, double sigma_max,
                     SigmaPrefactor prefactor) {
  if (prefactor == SigmaPrefactor::printed)
    return std::log(np.sigma_noise / sigma_max);
  return -std::log(sigma_max);
}

void validate_noise(const NoiseParams& np, double sigma_max) {
  require(sigma_max > 0, ErrorCode::invalid, "sigma_max must be positive");
  require(np.sigma_noise > 0, ErrorCode::invalid, "sigma_noise must be positive");
  require(np.p_outlier >= 0 && np.p_outlier <= 1, ErrorCode::invalid,
          "p_outlier must be in [0,1]");
}

}  // namespace

SceneVolume visible_volume(const CameraIntrinsics& k) {
  k.validate();
  const double depth_integral =
      (k.far * k.far * k.far - k.near * k.near * k.near) / 3.0;
  return {depth_integral * (k.width / k.fx) * (k.height / k.fy)};
}

double joint_noise_prior_logpdf(const NoiseParams& np, double sigma_max) {
  require(sigma_max > 0, ErrorCode::invalid, "sigma_max must be positive");
  if (np.p_outlier < 0 || np.p_outlier > 1) return -INFINITY;
  if (np.sigma_noise <= 0 || np.sigma_noise > sigma_max) return -INFINITY;
  return -std::log(sigma_max);
}

DepthImage sample_observation(const DepthImage& rendered, const CameraIntrinsics& k,
                              const NoiseParams& np, Rng& rng) {
  validate_noise(np, k.far);
  const PointCloud cloud = depth_to_cloud(rendered, k);
  require(!cloud.points.empty(), ErrorCode::invalid,
          "sample_observation: all-sentinel render");

  const double near3 = k.near * k.near * k.near;
  const double far3 = k.far * k.far * k.far;

  DepthImage out = DepthImage::constant(k.width, k.height, static_cast<float>(k.far));
  const std::size_t n = cloud.points.size();
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 q;
    if (rng.uniform() < np.p_outlier) {
      // uniform in the viewing frustum: depth density is proportional to z^2
      const double z = std::cbrt(near3 + rng.uniform() * (far3 - near3));
      const double x = rng.uniform((0.0 - k.cx) * z / k.fx, (k.width - k.cx) * z / k.fx);
      const double y = rng.uniform((0.0 - k.cy) * z / k.fy, (k.height - k.cy) * z / k.fy);
      q = Vec3(x, y, z);
    } else {
      q = cloud.points[rng.uniform_int(n)];
      q.x() += rng.normal(0.0, np.sigma_noise);
      q.y() += rng.normal(0.0, np.sigma_noise);
      q.z() += rng.normal(0.0, np.sigma_noise);
    }
    if (q.z() < k.near || q.z() >= k.far) continue;
    const long u = std::lround(k.fx * q.x() / q.z() + k.cx);
    const long v = std::lround(k.fy * q.y() / q.z() + k.cy);
    if (u < 0 || u >= static_cast<long>(k.width) || v < 0 ||
        v >= static_cast<long>(k.height))
      continue;
    float& cell = out.at(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v));
    cell = std::min(cell, static_cast<float>(q.z()));
  }
  return out;
}

double full_log_likelihood(const PointCloud& obs, const PointCloud& rendered,
                           const NoiseParams& np, const SceneVolume& vol,
                           double sigma_max, SigmaPrefactor prefactor) {
  validate_noise(np, sigma_max);
  require(!rendered.points.empty(), ErrorCode::invalid,
          "full_log_likelihood: empty rendered cloud");
  require(vol.v > 0, ErrorCode::invalid, "scene volume must be positive");

  const double sigma2 = np.sigma_noise * np.sigma_noise;
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma2);
  const double norm3 = std::pow(kTwoPi * sigma2, -1.5);
  const double coef = (1.0 - np.p_outlier) / rendered.points.size() * norm3;
  const double outlier_floor = np.p_outlier / vol.v;

  double total = log_prefactor(np, sigma_max, prefactor);
  for (const Vec3& o : obs.points) {
    double s = 0.0;
    for (const Vec3& r : rendered.points)
      s += std::exp(-(o - r).squaredNorm() * inv_two_sigma2);
    total += std::log(outlier_floor + coef * s);
  }
  return total;
}

ObservationCache ObservationCache::build(const DepthImage& obs,
                                         const CameraIntrinsics& k) {
  require(obs.width == k.width && obs.height == k.height, ErrorCode::invalid,
          "observation dimensions do not match intrinsics");
  ObservationCache cache;
  cache.width = obs.width;
  cache.height = obs.height;
  cache.index.assign(obs.depth.size(), -1);
  const float sentinel = static_cast<float>(k.far);
  for (std::uint32_t v = 0; v < obs.height; ++v) {
    for (std::uint32_t u = 0; u < obs.width; ++u) {
      const float z = obs.at(u, v);
      if (z >= sentinel) continue;
      cache.index[static_cast<std::size_t>(v) * obs.width + u] =
          static_cast<std::int32_t>(cache.points.size());
      const double zd = z;
      cache.points.emplace_back((u - k.cx) * zd / k.fx, (v - k.cy) * zd / k.fy, zd);
    }
  }
  return cache;
}

std::vector<double> windowed_log_likelihood_multi(
    const ObservationCache& obs, const DepthImage& rendered,
    const CameraIntrinsics& k, const std::vector<NoiseParams>& noise,
    const SceneVolume& vol, double sigma_max, int window,
    SigmaPrefactor prefactor) {
  require(obs.width == rendered.width && obs.height == rendered.height,
          ErrorCode::invalid, "windowed likelihood: image dimension mismatch");
  require(window >= 0, ErrorCode::invalid, "window radius must be >= 0");
  require(vol.v > 0, ErrorCode::invalid, "scene volume must be positive");
  require(!noise.empty(), ErrorCode::invalid, "no noise settings given");
  for (const NoiseParams& np : noise) validate_noise(np, sigma_max);

  const int w = static_cast<int>(rendered.width);
  const int h = static_cast<int>(rendered.height);
  const float sentinel = static_cast<float>(k.far);

  // backproject the rendered image once
  std::vector<Vec3> rend_points(rendered.depth.size());
  std::vector<std::uint8_t> rend_valid(rendered.depth.size(), 0);
  std::size_t rend_count = 0;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const float z = rendered.depth[static_cast<std::size_t>(v) * w + u];
      if (z >= sentinel) continue;
      const double zd = z;
      const std::size_t idx = static_cast<std::size_t>(v) * w + u;
      rend_points[idx] = Vec3((u - k.cx) * zd / k.fx, (v - k.cy) * zd / k.fy, zd);
      rend_valid[idx] = 1;
      ++rend_count;
    }
  }
  require(rend_count > 0, ErrorCode::invalid,
          "windowed likelihood: empty rendered cloud");

  const std::size_t n_noise = noise.size();
  std::vector<double> coef(n_noise), floor_term(n_noise);
  std::vector<double> totals(n_noise);
  for (std::size_t e = 0; e < n_noise; ++e) {
    const double sigma2 = noise[e].sigma_noise * noise[e].sigma_noise;
    coef[e] = (1.0 - noise[e].p_outlier) / rend_count * std::pow(kTwoPi * sigma2, -1.5);
    floor_term[e] = noise[e].p_outlier / vol.v;
    totals[e] = log_prefactor(noise[e], sigma_max, prefactor);
  }

  // map each noise entry to its distinct sigma slot so the exp sums are shared
  std::vector<double> sigma_slots;
  std::vector<std::size_t> slot_of(n_noise);
  for (std::size_t e = 0; e < n_noise; ++e) {
    auto it = std::find(sigma_slots.begin(), sigma_slots.end(), noise[e].sigma_noise);
    if (it == sigma_slots.end()) {
      slot_of[e] = sigma_slots.size();
      sigma_slots.push_back(noise[e].sigma_noise);
    } else {
      slot_of[e] = static_cast<std::size_t>(it - sigma_slots.begin());
    }
  }
  std::vector<double> slot_inv_two_sigma2(sigma_slots.size());
  for (std::size_t s = 0; s < sigma_slots.size(); ++s)
    slot_inv_two_sigma2[s] = 1.0 / (2.0 * sigma_slots[s] * sigma_slots[s]);

  std::vector<double> dist2;
  dist2.reserve(static_cast<std::size_t>(2 * window + 1) * (2 * window + 1));
  std::vector<double> slot_sums(sigma_slots.size());

  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const std::int32_t oi = obs.index[static_cast<std::size_t>(v) * w + u];
      if (oi < 0) continue;
      const Vec3& o = obs.points[static_cast<std::size_t>(oi)];

      dist2.clear();
      const int v_lo = std::max(0, v - window), v_hi = std::min(h - 1, v + window);
      const int u_lo = std::max(0, u - window), u_hi = std::min(w - 1, u + window);
      for (int rv = v_lo; rv <= v_hi; ++rv) {
        const std::size_t row = static_cast<std::size_t>(rv) * w;
        for (int ru = u_lo; ru <= u_hi; ++ru) {
          if (!rend_valid[row + ru]) continue;
          dist2.push_back((o - rend_points[row + ru]).squaredNorm());
        }
      }

      for (std::size_t s = 0; s < sigma_slots.size(); ++s) {
        double acc = 0.0;
        const double scale = slot_inv_two_sigma2[s];
        for (double d2 : dist2) acc += std::exp(-d2 * scale);
        slot_sums[s] = acc;
      }
      for (std::size_t e = 0; e < n_noise; ++e)
        totals[e] += std::log(floor_term[e] + coef[e] * slot_sums[slot_of[e]]);
    }
  }
  return totals;
}

double windowed_log_likelihood(const DepthImage& obs, const DepthImage& rendered,
                               const CameraIntrinsics& k, const NoiseParams& np,
                               const SceneVolume& vol, double sigma_max, int window,
                               SigmaPrefactor prefactor) {
  const ObservationCache cache = ObservationCache::build(obs, k);
  return windowed_log_likelihood_multi(cache, rendered, k, {np}, vol, sigma_max,
                                       window, prefactor)[0];
}

int default_window(std::uint32_t width) {
  return std::max(1, static_cast<int>(std::llround(2.0 * width / 100.0)));
}

}  // namespace b3d
