#include "htprox/noise.hpp"

#include <algorithm>
#include <cmath>

#include "htprox/errors.hpp"

namespace htprox {

void HeavyTailModel::validate() const {
  if (!(omega > 1.0) || !std::isfinite(omega)) throw ConfigError("tail index omega must exceed 1");
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw ConfigError("noise scale rho must be nonnegative");
}

double heavy_tail_quantile(double u, double omega) {
  const double centered = u - 0.5;
  if (centered == 0.0) return 0.0;
  const double w = 1.0 - 2.0 * std::abs(centered);
  const double magnitude = std::pow(w, -1.0 / omega) - 1.0;
  return centered > 0.0 ? magnitude : -magnitude;
}

double heavy_tail_cdf(double t, double omega) {
  const double tail = 1.0 - std::pow(1.0 + std::abs(t), -omega);
  return t >= 0.0 ? 0.5 + 0.5 * tail : 0.5 - 0.5 * tail;
}

double sample_heavy_tail(const HeavyTailModel& model, Stream& stream) {
  double u = 0.0;
  do {
    u = stream.uniform_open();
  } while (u == 0.5);
  return heavy_tail_quantile(u, model.omega);
}

void sample_noise_vector(const HeavyTailModel& model, Stream& stream, Eigen::Ref<Vector> out) {
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = sample_heavy_tail(model, stream);
}

Vector sample_noise_vector(const HeavyTailModel& model, int n, Stream& stream) {
  if (n < 1) throw ConfigError("noise dimension must be positive");
  Vector out(n);
  sample_noise_vector(model, stream, out);
  return out;
}

StochasticOracle noisy_oracle(SubgradientFn grad, HeavyTailModel model) {
  model.validate();
  return [grad = std::move(grad), model](const Vector& x, Stream& stream, Vector& out) {
    grad(x, out);
    if (model.rho == 0.0) return;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      out[i] += model.rho * sample_heavy_tail(model, stream);
    }
  };
}

double heavy_tail_abs_moment(double alpha, double omega) {
  if (!(alpha >= 0.0) || !(alpha < omega)) {
    throw ConfigError("absolute moment of order alpha is infinite unless alpha < omega");
  }
  const double log_beta = std::lgamma(alpha + 1.0) + std::lgamma(omega - alpha) - std::lgamma(omega + 1.0);
  return omega * std::exp(log_beta);
}

double heavy_tail_sigma_bound(const HeavyTailModel& model, int n, double alpha) {
  return model.rho * std::pow(n * heavy_tail_abs_moment(alpha, model.omega), 1.0 / alpha);
}

NoisePlugIn plug_in_noise_constants(const HeavyTailModel& model, int n, Stream& stream,
                                    long scalar_draws) {
  model.validate();
  NoisePlugIn out;
  out.alpha = std::min(2.0, 0.95 * model.omega);
  if (model.rho == 0.0) {
    out.method = "noiseless";
    return out;
  }
  if (model.omega > 2.0) {
    const double variance = 2.0 / ((model.omega - 1.0) * (model.omega - 2.0));
    out.sigma = model.rho * std::sqrt(n * variance);
    out.method = "second_moment";
    return out;
  }
  const long vectors = std::max<long>(100, (scalar_draws + n - 1) / n);
  Vector xi(n);
  double sum = 0.0;
  for (long k = 0; k < vectors; ++k) {
    sample_noise_vector(model, stream, xi);
    sum += std::pow(xi.norm(), out.alpha);
  }
  out.sigma = model.rho * std::pow(sum / static_cast<double>(vectors), 1.0 / out.alpha);
  out.method = "monte_carlo";
  out.draws = vectors * n;
  return out;
}

}  // namespace htprox
