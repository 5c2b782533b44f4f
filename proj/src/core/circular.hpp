#pragma once

#include <vector>

namespace b3d {

// log I0(kappa), stable for large kappa (switches to the asymptotic series).
double log_bessel_i0(double kappa);

// A(kappa) = I1(kappa) / I0(kappa), the mean resultant length of a von Mises
// distribution with concentration kappa. Strictly increasing on [0, inf).
double bessel_ratio(double kappa);

struct VonMisesFit {
  double mu = 0;
  double kappa = 0;
  // true when the resultant length pushed kappa to the bracket limit
  bool saturated = false;
};

inline constexpr double kVonMisesKappaMax = 1e8;

// Weighted maximum-likelihood fit: mu is the weighted circular mean and
// kappa solves A(kappa) = Rbar by bracketed bisection to 1e-8 relative.
// Fails (numeric error) when Rbar is 1 to machine precision, i.e. the sample
// is a point mass and the concentration is unbounded.
VonMisesFit fit_von_mises(const std::vector<double>& angles,
                          const std::vector<double>& weights);

double von_mises_logpdf(double theta, double mu, double kappa);

}  // namespace b3d
