#pragma once

#include <string>

#include "htprox/core.hpp"

namespace htprox {

/// Symmetric polynomial-tail noise with density omega / (2 (1 + |t|)^(1+omega)),
/// scaled by rho inside the oracle wrapper.
struct HeavyTailModel {
  double omega = 2.0;  // tail index, > 1
  double rho = 1.0;    // noise scale, >= 0

  void validate() const;
};

/// Inverse CDF of the tail density applied to a uniform deviate u in (0, 1).
double heavy_tail_quantile(double u, double omega);

/// F(t) = 1/2 + sign(t) (1 - (1 + |t|)^-omega) / 2.
double heavy_tail_cdf(double t, double omega);

/// One unscaled draw. Deviates exactly 0 or 1/2 are redrawn.
double sample_heavy_tail(const HeavyTailModel& model, Stream& stream);

/// n i.i.d. unscaled draws.
Vector sample_noise_vector(const HeavyTailModel& model, int n, Stream& stream);
void sample_noise_vector(const HeavyTailModel& model, Stream& stream, Eigen::Ref<Vector> out);

/// G(x; xi) = grad(x) + rho xi. With rho == 0 no noise is drawn and the
/// oracle reproduces grad bit for bit.
StochasticOracle noisy_oracle(SubgradientFn grad, HeavyTailModel model);

/// E|xi_1|^alpha = omega B(alpha + 1, omega - alpha), finite for alpha < omega.
double heavy_tail_abs_moment(double alpha, double omega);

/// Rigorous sigma for E|rho xi|^alpha over R^n, using |xi|_2 <= |xi|_alpha:
/// rho (n E|xi_1|^alpha)^(1/alpha).
double heavy_tail_sigma_bound(const HeavyTailModel& model, int n, double alpha);

/// (sigma, alpha) attached to an experiment instance.
struct NoisePlugIn {
  double alpha = 2.0;
  double sigma = 0.0;
  std::string method;  // "second_moment", "monte_carlo" or "noiseless"
  long draws = 0;
};

/// alpha = min(2, 0.95 omega). For omega > 2, sigma = (E|rho xi|^2)^(1/2);
/// otherwise a Monte Carlo estimate of (E|rho xi|^alpha)^(1/alpha) from
/// `scalar_draws` coordinate draws grouped into n-vectors.
NoisePlugIn plug_in_noise_constants(const HeavyTailModel& model, int n, Stream& stream,
                                    long scalar_draws = 100000);

}  // namespace htprox
