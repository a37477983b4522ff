#include "htprox/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "htprox/errors.hpp"

namespace htprox {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double indicator_heavy(double alpha) { return alpha < 2.0 ? 1.0 : 0.0; }

void require_unit_interval(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) throw ConfigError(std::string(name) + " must lie in (0, 1)");
}

double smooth_cap(double lipschitz, double L_eps) {
  const double L = lipschitz + L_eps;
  return L > 0.0 ? 1.0 / (4.0 * L) : kInf;
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::SPGM: return "SPGM";
    case Algorithm::SPGMA: return "SPGM-A";
    case Algorithm::SPGMC: return "SPGM-C";
    case Algorithm::DeterministicBaseline: return "baseline";
  }
  return "?";
}

std::string to_string(GuaranteeMode m) {
  return m == GuaranteeMode::Expectation ? "expectation" : "high_probability";
}

std::string to_string(Theorem t) {
  switch (t) {
    case Theorem::T21i: return "K1";
    case Theorem::T21ii: return "K2";
    case Theorem::T31i: return "K3";
    case Theorem::T31ii: return "K4";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
  std::string k;
  for (char c : s) {
    if (c != '-' && c != '_') k.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (k == "spgm") return Algorithm::SPGM;
  if (k == "spgma") return Algorithm::SPGMA;
  if (k == "spgmc") return Algorithm::SPGMC;
  if (k == "baseline") return Algorithm::DeterministicBaseline;
  throw ConfigError("unknown algorithm '" + s + "'");
}

void ScheduleInputs::validate() const {
  smoothness.validate();
  noise.validate();
  if (!(diameter > 0.0) || !std::isfinite(diameter)) throw ConfigError("D_h must be positive and finite");
}

double inexact_lipschitz(double holder, double nu, double eps) {
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (holder == 0.0) return 0.0;
  return std::pow(holder, 2.0 / (1.0 + nu)) * std::pow(4.0 / eps, (1.0 - nu) / (1.0 + nu));
}

double lambda_sq(const NoiseConstants& noise, double diameter, double eps) {
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  const double a = noise.alpha;
  return 8.0 * (a - 1.0) * (a - 1.0) * std::pow(noise.sigma / a, a / (a - 1.0)) *
         std::pow(8.0 * diameter / eps, (2.0 - a) / (a - 1.0));
}

double lambda_tilde_sq(const NoiseConstants& noise, double diameter, double eps, double delta) {
  require_unit_interval(delta, "delta");
  return std::pow(1.0 + std::log(2.0 / delta), 1.0 / (noise.alpha - 1.0)) *
         lambda_sq(noise, diameter, eps);
}

StepPair spgm_step(const ScheduleInputs& in, long K, double eps, double delta) {
  in.validate();
  if (K < 1) throw ConfigError("iteration budget K must be at least 1");
  const double cap = smooth_cap(in.smoothness.lipschitz,
                                inexact_lipschitz(in.smoothness.holder, in.smoothness.nu, eps));
  const double m2 = in.smoothness.nonsmooth * in.smoothness.nonsmooth;
  const auto branch = [&](double lambda2) {
    const double denom = 2.0 * static_cast<double>(K) * (m2 + lambda2);
    return denom > 0.0 ? in.diameter / std::sqrt(denom) : kInf;
  };
  StepPair out;
  out.eta = std::min(cap, branch(lambda_sq(in.noise, in.diameter, eps)));
  out.eta_tilde = std::min(cap, branch(lambda_tilde_sq(in.noise, in.diameter, eps, delta)));
  if (!std::isfinite(out.eta)) {
    throw ConfigError("step size is unbounded: L_f, H_f, M_f and sigma are all zero");
  }
  return out;
}

StepPair spgma_steps(const ScheduleInputs& in, long K, double eps, double delta) {
  in.validate();
  if (K < 1) throw ConfigError("iteration budget K must be at least 1");
  const double k = static_cast<double>(K);
  const double cap = smooth_cap(in.smoothness.lipschitz,
                                inexact_lipschitz(in.smoothness.holder, in.smoothness.nu, eps / k));
  const double m2 = in.smoothness.nonsmooth * in.smoothness.nonsmooth;
  StepPair out;
  {
    const double denom = (m2 + lambda_sq(in.noise, in.diameter, eps)) * (2.0 * k + 3.0) * (k + 2.0) * k;
    out.eta = std::min(cap, denom > 0.0 ? std::sqrt(6.0 / denom) * in.diameter : kInf);
  }
  {
    const double denom =
        (m2 + lambda_tilde_sq(in.noise, in.diameter, eps, delta)) * (k + 2.0) * (k + 2.0) * k;
    out.eta_tilde = std::min(cap, denom > 0.0 ? std::sqrt(2.0 / denom) * in.diameter : kInf);
  }
  if (!std::isfinite(out.eta)) {
    throw ConfigError("step size is unbounded: L_f, H_f, M_f and sigma are all zero");
  }
  return out;
}

double k_bound_value(Theorem theorem, const ScheduleInputs& in, double eps, double delta) {
  const auto& s = in.smoothness;
  const double D = in.diameter;
  const double D2 = D * D;
  const double a = in.noise.alpha;
  const double L_eps = inexact_lipschitz(s.holder, s.nu, eps);
  const double holder_power = (1.0 + s.nu) / (1.0 + 3.0 * s.nu);
  const auto tail_term = [&](double c) {
    return (std::pow(c * a * D * in.noise.sigma / eps, a / (a - 1.0)) + indicator_heavy(a)) *
           std::log(2.0 / delta) / (a - 1.0);
  };
  switch (theorem) {
    case Theorem::T21i: {
      const double lam = std::sqrt(lambda_sq(in.noise, D, eps));
      return std::max({8.0 * D2 * (s.lipschitz + L_eps) / eps,
                       8.0 * D2 * std::pow(s.nonsmooth + lam, 2) / (eps * eps), 1.0});
    }
    case Theorem::T21ii: {
      const double lam = std::sqrt(lambda_tilde_sq(in.noise, D, eps, delta));
      return std::max({8.0 * D2 * (s.lipschitz + L_eps) / eps,
                       32.0 * D2 * std::pow(s.nonsmooth + lam, 2) / (eps * eps), tail_term(4.0), 1.0});
    }
    case Theorem::T31i: {
      const double lam = std::sqrt(lambda_sq(in.noise, D, eps));
      return std::max({std::sqrt(48.0 * D2 * s.lipschitz / eps),
                       std::pow(48.0 * D2 * L_eps / eps, holder_power),
                       (24.0 * D) * (24.0 * D) * std::pow(s.nonsmooth + lam, 2) / (3.0 * eps * eps), 2.0});
    }
    case Theorem::T31ii: {
      const double lam = std::sqrt(lambda_tilde_sq(in.noise, D, eps, delta));
      return std::max({std::sqrt(64.0 * D2 * s.lipschitz / eps),
                       std::pow(64.0 * D2 * L_eps / eps, holder_power),
                       2.0 * (16.0 * D) * (16.0 * D) * std::pow(s.nonsmooth + lam, 2) / (eps * eps),
                       tail_term(16.0), 2.0});
    }
  }
  return 1.0;
}

long k_bound(Theorem theorem, const ScheduleInputs& in, double eps, double delta) {
  in.validate();
  require_unit_interval(eps, "eps");
  require_unit_interval(delta, "delta");
  const double value = k_bound_value(theorem, in, eps, delta);
  if (!std::isfinite(value) || value > 9.0e18) throw ConfigError("iteration bound overflows");
  return static_cast<long>(std::ceil(value));
}

double epsilon_for_budget(Theorem theorem, const ScheduleInputs& in, long K, double delta) {
  in.validate();
  const double target = static_cast<double>(K);
  double hi = 1.0;
  while (k_bound_value(theorem, in, hi, delta) > target) {
    hi *= 2.0;
    if (hi > 1e300) throw ConfigError("no accuracy is reachable within the budget");
  }
  double lo = hi;
  while (lo > 1e-300 && k_bound_value(theorem, in, lo, delta) <= target) lo *= 0.5;
  for (int it = 0; it < 200 && hi - lo > 1e-10 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (k_bound_value(theorem, in, mid, delta) <= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

Theorem theorem_for(Algorithm algorithm, GuaranteeMode mode) {
  const bool accelerated = algorithm == Algorithm::SPGMA;
  if (mode == GuaranteeMode::Expectation) return accelerated ? Theorem::T31i : Theorem::T21i;
  return accelerated ? Theorem::T31ii : Theorem::T21ii;
}

SchedulePlan make_plan(Algorithm algorithm, GuaranteeMode mode, const ScheduleInputs& in,
                       double eps, double delta, std::optional<long> K) {
  if (algorithm == Algorithm::DeterministicBaseline) {
    throw ConfigError("the deterministic baseline has no theory step plan");
  }
  in.validate();
  // With K supplied eps only sets the step, so any positive accuracy is allowed.
  if (K) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("eps must be positive and finite");
  } else {
    require_unit_interval(eps, "eps");
  }
  require_unit_interval(delta, "delta");
  SchedulePlan plan;
  plan.algorithm = algorithm;
  plan.mode = mode;
  plan.epsilon = eps;
  plan.delta = delta;
  if (K) {
    if (*K < 1) throw ConfigError("iteration budget K must be at least 1");
    plan.K = *K;
  } else {
    plan.K = k_bound(theorem_for(algorithm, mode), in, eps, delta);
    plan.K_from_bound = true;
  }
  const bool accelerated = algorithm == Algorithm::SPGMA;
  const double eps_L = accelerated ? eps / static_cast<double>(plan.K) : eps;
  plan.L_eps = inexact_lipschitz(in.smoothness.holder, in.smoothness.nu, eps_L);
  plan.Lambda_sq = lambda_sq(in.noise, in.diameter, eps);
  plan.LambdaTilde_sq = lambda_tilde_sq(in.noise, in.diameter, eps, delta);
  const StepPair steps = accelerated ? spgma_steps(in, plan.K, eps, delta) : spgm_step(in, plan.K, eps, delta);
  plan.eta = steps.eta;
  plan.eta_tilde = steps.eta_tilde;
  return plan;
}

void to_json(nlohmann::json& j, const SchedulePlan& plan) {
  j = nlohmann::json{{"algorithm", to_string(plan.algorithm)},
                     {"mode", to_string(plan.mode)},
                     {"epsilon", plan.epsilon},
                     {"delta", plan.delta},
                     {"K", plan.K},
                     {"K_from_bound", plan.K_from_bound},
                     {"L_eps", plan.L_eps},
                     {"Lambda_sq", plan.Lambda_sq},
                     {"LambdaTilde_sq", plan.LambdaTilde_sq},
                     {"eta", plan.eta},
                     {"eta_tilde", plan.eta_tilde}};
}

void to_json(nlohmann::json& j, const ScheduleInputs& in) {
  j = nlohmann::json{{"L_f", in.smoothness.lipschitz}, {"H_f", in.smoothness.holder},
                     {"nu", in.smoothness.nu},         {"M_f", in.smoothness.nonsmooth},
                     {"sigma", in.noise.sigma},        {"alpha", in.noise.alpha},
                     {"D_h", in.diameter}};
}

}  // namespace htprox
