#pragma once

#include <algorithm>
#include <cmath>
#include <memory>

#include "htprox/core.hpp"
#include "htprox/prox.hpp"

namespace testsupport {

using htprox::Vector;

inline Vector random_vector(htprox::Stream& s, int n, double lo, double hi) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * s.uniform();
  return v;
}

// f(x) = 1/2 |x - c|^2 over the box [-bound, bound]^n, exact oracle.
inline htprox::CompositeProblem shifted_quadratic(const Vector& c, double bound) {
  const int n = static_cast<int>(c.size());
  auto box = std::make_shared<htprox::BoxL1Prox>();
  box->lower = Vector::Constant(n, -bound);
  box->upper = Vector::Constant(n, bound);
  htprox::CompositeProblem p;
  p.dimension = n;
  p.name = "shifted_quadratic";
  p.exact_subgradient = [c](const Vector& x, Vector& g) { g = x - c; };
  p.stochastic_oracle = [c](const Vector& x, htprox::Stream&, Vector& g) { g = x - c; };
  p.f_value = [c](const Vector& x) { return 0.5 * (x - c).squaredNorm(); };
  p.h_value = [](const Vector&) { return 0.0; };
  p.prox_h = [box](const Vector& v, double eta, Vector& out) { box->apply(v, eta, out); };
  p.in_domain = [box](const Vector& x) { return box->contains(x); };
  p.smoothness.lipschitz = 1.0;
  p.domain_diameter = htprox::domain_diameter_box(box->lower, box->upper);
  p.feasible_start = Vector::Zero(n);
  return p;
}

// f(x) = |x| on [-1, 1] with sign(0) = 0, exact oracle.
inline htprox::CompositeProblem absolute_value_1d(double x0) {
  auto box = std::make_shared<htprox::BoxL1Prox>();
  box->lower = Vector::Constant(1, -1.0);
  box->upper = Vector::Constant(1, 1.0);
  htprox::CompositeProblem p;
  p.dimension = 1;
  p.name = "abs1d";
  auto sub = [](const Vector& x, Vector& g) {
    g.resize(1);
    g[0] = x[0] > 0 ? 1.0 : (x[0] < 0 ? -1.0 : 0.0);
  };
  p.exact_subgradient = sub;
  p.stochastic_oracle = [sub](const Vector& x, htprox::Stream&, Vector& g) { sub(x, g); };
  p.f_value = [](const Vector& x) { return std::abs(x[0]); };
  p.h_value = [](const Vector&) { return 0.0; };
  p.prox_h = [box](const Vector& v, double eta, Vector& out) { box->apply(v, eta, out); };
  p.in_domain = [box](const Vector& x) { return box->contains(x); };
  p.smoothness.nonsmooth = 1.0;
  p.domain_diameter = 2.0;
  p.feasible_start = Vector::Constant(1, x0);
  return p;
}

}  // namespace testsupport
