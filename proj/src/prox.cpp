#include "htprox/prox.hpp"

#include <algorithm>
#include <cmath>

#include "htprox/errors.hpp"

namespace htprox {
namespace {

void require_step(double eta) {
  if (!(eta > 0.0)) throw ConfigError("prox step eta must be positive");
}

void require_finite(const Vector& v) {
  if (!v.allFinite()) throw NumericalError("prox input contains non-finite entries");
}

}  // namespace

void BoxL1Prox::validate() const {
  if (lower.size() != upper.size()) throw ConfigError("box bounds differ in size");
  if ((lower.array() > upper.array()).any()) throw ConfigError("box requires lower <= upper");
  if (!(lambda >= 0.0)) throw ConfigError("l1 weight must be nonnegative");
}

bool BoxL1Prox::contains(const Vector& x) const {
  return x.size() == lower.size() && (x.array() >= lower.array()).all() &&
         (x.array() <= upper.array()).all();
}

void BoxL1Prox::apply(const Vector& v, double eta, Vector& out) const {
  require_step(eta);
  require_finite(v);
  const double tau = eta * lambda;
  out.resize(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out[i] = std::clamp(soft_threshold(v[i], tau), lower[i], upper[i]);
  }
}

void BallProx::validate() const {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("ball radius must be positive");
}

bool BallProx::contains(const Vector& x) const {
  return x.norm() <= radius * (1.0 + 1e-12);
}

void BallProx::apply(const Vector& v, double eta, Vector& out) const {
  require_step(eta);
  require_finite(v);
  const double norm = v.norm();
  if (norm <= radius) {
    out = v;
  } else {
    out = (radius / norm) * v;
  }
}

Vector prox_box_l1(const BoxL1Prox& p, const Vector& v, double eta) {
  Vector out;
  p.apply(v, eta, out);
  return out;
}

Vector prox_ball(const BallProx& p, const Vector& v, double eta) {
  Vector out;
  p.apply(v, eta, out);
  return out;
}

double domain_diameter_box(const Vector& lower, const Vector& upper) {
  if (lower.size() != upper.size()) throw ConfigError("box bounds differ in size");
  if ((lower.array() > upper.array()).any()) throw ConfigError("box requires lower <= upper");
  return (upper - lower).norm();
}

double domain_diameter_ball(double radius) {
  if (!(radius > 0.0)) throw ConfigError("ball radius must be positive");
  return 2.0 * radius;
}

}  // namespace htprox
