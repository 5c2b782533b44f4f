#include "core/circular.hpp"

#include <cmath>

#include "core/error.hpp"

namespace b3d {

namespace {
constexpr double kTwoPi = 6.283185307179586476925287;
constexpr double kAsymptoticSwitch = 300.0;
}  // namespace

double log_bessel_i0(double kappa) {
  require(kappa >= 0, ErrorCode::invalid, "log_bessel_i0: kappa must be >= 0");
  if (kappa < kAsymptoticSwitch) return std::log(std::cyl_bessel_i(0.0, kappa));
  // I0(k) ~ e^k / sqrt(2 pi k) * (1 + 1/(8k) + 9/(128 k^2) + ...)
  const double inv_k = 1.0 / kappa;
  const double series = inv_k * (0.125 + inv_k * (0.0703125 + inv_k * 0.0732421875));
  return kappa - 0.5 * std::log(kTwoPi * kappa) + std::log1p(series);
}

double bessel_ratio(double kappa) {
  require(kappa >= 0, ErrorCode::invalid, "bessel_ratio: kappa must be >= 0");
  if (kappa == 0) return 0.0;
  if (kappa < kAsymptoticSwitch)
    return std::cyl_bessel_i(1.0, kappa) / std::cyl_bessel_i(0.0, kappa);
  // A(k) ~ 1 - 1/(2k) - 1/(8k^2) - 1/(8k^3)
  const double inv_k = 1.0 / kappa;
  return 1.0 - inv_k * (0.5 + inv_k * (0.125 + inv_k * 0.125));
}

VonMisesFit fit_von_mises(const std::vector<double>& angles,
                          const std::vector<double>& weights) {
  require(angles.size() == weights.size(), ErrorCode::invalid,
          "fit_von_mises: angles/weights length mismatch");
  require(!angles.empty(), ErrorCode::invalid, "fit_von_mises: no samples");

  double c = 0, s = 0, total = 0;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    require(weights[i] >= 0, ErrorCode::invalid, "fit_von_mises: negative weight");
    c += weights[i] * std::cos(angles[i]);
    s += weights[i] * std::sin(angles[i]);
    total += weights[i];
  }
  require(total > 0, ErrorCode::invalid, "fit_von_mises: weights sum to zero");

  VonMisesFit fit;
  fit.mu = std::atan2(s, c);
  if (fit.mu < 0) fit.mu += kTwoPi;
  const double rbar = std::sqrt(c * c + s * s) / total;
  require(rbar < 1.0 - 1e-14, ErrorCode::numeric,
          "fit_von_mises: degenerate concentration (point mass)");

  if (rbar <= 0) {
    fit.kappa = 0;
    return fit;
  }
  if (bessel_ratio(kVonMisesKappaMax) <= rbar) {
    fit.kappa = kVonMisesKappaMax;
    fit.saturated = true;
    return fit;
  }

  double lo = 0.0, hi = kVonMisesKappaMax;
  while (hi - lo > 1e-8 * std::max(1.0, lo)) {
    const double mid = 0.5 * (lo + hi);
    if (bessel_ratio(mid) < rbar)
      lo = mid;
    else
      hi = mid;
  }
  fit.kappa = 0.5 * (lo + hi);
  return fit;
}

double von_mises_logpdf(double theta, double mu, double kappa) {
  return kappa * std::cos(theta - mu) - std::log(kTwoPi) - log_bessel_i0(kappa);
}

}  // namespace b3d
