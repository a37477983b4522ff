#pragma once

#include "htprox/core.hpp"

namespace htprox {

/// h(x) = lambda |x|_1 + indicator of the box [lower, upper].
struct BoxL1Prox {
  Vector lower;
  Vector upper;
  double lambda = 0.0;

  void validate() const;
  [[nodiscard]] bool contains(const Vector& x) const;
  [[nodiscard]] double value(const Vector& x) const { return lambda * x.lpNorm<1>(); }
  void apply(const Vector& v, double eta, Vector& out) const;
};

/// h = indicator of the centered Euclidean ball of the given radius.
struct BallProx {
  double radius = 1.0;

  void validate() const;
  /// Membership allows a relative slack of 1e-12 for the rescaling round-off.
  [[nodiscard]] bool contains(const Vector& x) const;
  void apply(const Vector& v, double eta, Vector& out) const;
};

/// sign(t) * max(|t| - tau, 0), with sign(0) = 0.
inline double soft_threshold(double t, double tau) {
  if (t > tau) return t - tau;
  if (t < -tau) return t + tau;
  return 0.0;
}

/// Componentwise soft-threshold by eta*lambda followed by a clamp to [l, u].
Vector prox_box_l1(const BoxL1Prox& p, const Vector& v, double eta);

/// Euclidean projection onto the ball; eta is only checked for positivity.
Vector prox_ball(const BallProx& p, const Vector& v, double eta);

double domain_diameter_box(const Vector& lower, const Vector& upper);
double domain_diameter_ball(double radius);

}  // namespace htprox
