#include "htprox/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "htprox/errors.hpp"

namespace htprox {
namespace {

using Clock = std::chrono::steady_clock;

void check_finite(const Vector& v, long k, const char* what) {
  if (!v.allFinite()) {
    std::ostringstream msg;
    msg << "non-finite " << what << " at iteration " << k
        << " (step size too large or oracle blow-up)";
    throw NumericalError(msg.str());
  }
}

void check_membership(const CompositeProblem& problem, const Vector& x, long k) {
  if (!problem.in_domain(x)) {
    std::ostringstream msg;
    msg << "prox output left dom h at iteration " << k;
    throw NumericalError(msg.str());
  }
}

// Gap bookkeeping shared by the three stochastic methods.
class Tracker {
 public:
  Tracker(const CompositeProblem& problem, const SolverConfig& config, RunResult& result)
      : problem_(problem), config_(config), result_(result) {
    const double F0 = evaluate_F(problem, problem.feasible_start);
    result_.gap_history.push_back({0, F0});
    if (config.gap_target) {
      const double denom = F0 - config.gap_target->reference_F_star;
      if (!(denom > 0.0)) throw ConfigError("gap target needs F(x0) > F*");
      denom_ = denom;
    }
  }

  /// Records F(z) on cadence; returns true when the gap target is met.
  bool observe(long iterations, const Vector& z) {
    const bool last = iterations == config_.max_iterations;
    if (iterations % config_.trace_cadence != 0 && !last) return false;
    const double F = evaluate_F(problem_, z);
    result_.gap_history.push_back({iterations, F});
    if (config_.gap_target) {
      const double gap = (F - config_.gap_target->reference_F_star) / denom_;
      if (gap < config_.gap_target->tolerance) {
        result_.terminated_by = Termination::GapTarget;
        return true;
      }
    }
    return false;
  }

 private:
  const CompositeProblem& problem_;
  const SolverConfig& config_;
  RunResult& result_;
  double denom_ = 1.0;
};

RunResult run_averaged(const CompositeProblem& problem, const SolverConfig& config, bool clip) {
  problem.validate();
  config.validate();
  const auto start = Clock::now();
  const double eta = config.base_step();
  const double tau = clip ? *config.clip_threshold : std::numeric_limits<double>::infinity();
  const Stream root(config.seed);

  RunResult result;
  result.seed = config.seed;
  result.step_size = eta;
  Tracker tracker(problem, config, result);

  Vector x = problem.feasible_start;
  Vector z = x;
  Vector g(problem.dimension);
  Vector v(problem.dimension);
  double weight_sum = 0.0;
  for (long k = 0; k < config.max_iterations; ++k) {
    Stream stream = root.substream(static_cast<std::uint64_t>(k));
    problem.stochastic_oracle(x, stream, g);
    ++result.oracle_calls;
    if (clip) {
      const double norm = g.norm();
      if (norm > tau) g *= tau / norm;
    }
    v = x - eta * g;
    problem.prox_h(v, eta, x);
    check_finite(x, k, "iterate");
    check_membership(problem, x, k);
    weight_sum += eta;
    z += (eta / weight_sum) * (x - z);
    result.iterations_used = k + 1;
    if (tracker.observe(k + 1, z)) break;
  }
  result.output_point = z;
  result.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

}  // namespace

void SolverConfig::validate() const {
  if (algorithm == Algorithm::DeterministicBaseline) {
    throw ConfigError("use run_baseline for the deterministic baseline");
  }
  if (algorithm == Algorithm::SPGMC) {
    if (!clip_threshold || !(*clip_threshold > 0.0)) {
      throw ConfigError("SPGM-C requires a positive clip threshold");
    }
  } else if (clip_threshold) {
    throw ConfigError("clip threshold is only valid for SPGM-C");
  }
  if (trace_cadence < 1) throw ConfigError("trace cadence must be at least 1");
  if (max_iterations < 0) throw ConfigError("iteration budget must be nonnegative");
  if (!(step_multiplier > 0.0)) throw ConfigError("step multiplier must be positive");
  if (gap_target && !(gap_target->tolerance > 0.0 && gap_target->tolerance < 1.0)) {
    throw ConfigError("gap tolerance must lie in (0, 1)");
  }
  const double eta = base_step();
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("base step must be positive and finite");
}

double SolverConfig::base_step() const {
  const double raw = std::visit(
      [](const auto& rule) {
        using T = std::decay_t<decltype(rule)>;
        if constexpr (std::is_same_v<T, SchedulePlan>) {
          return rule.step();
        } else {
          return rule.eta;
        }
      },
      step);
  return step_multiplier * raw;
}

RunResult run_spgm(const CompositeProblem& problem, const SolverConfig& config) {
  if (config.algorithm != Algorithm::SPGM) throw ConfigError("run_spgm needs algorithm SPGM");
  return run_averaged(problem, config, false);
}

RunResult run_spgmc(const CompositeProblem& problem, const SolverConfig& config) {
  if (config.algorithm != Algorithm::SPGMC) throw ConfigError("run_spgmc needs algorithm SPGM-C");
  return run_averaged(problem, config, true);
}

RunResult run_spgma(const CompositeProblem& problem, const SolverConfig& config) {
  if (config.algorithm != Algorithm::SPGMA) throw ConfigError("run_spgma needs algorithm SPGM-A");
  problem.validate();
  config.validate();
  const auto start = Clock::now();
  const double eta = config.base_step();
  const Stream root(config.seed);

  RunResult result;
  result.seed = config.seed;
  result.step_size = eta;
  Tracker tracker(problem, config, result);

  Vector x = problem.feasible_start;
  Vector z = x;
  Vector y(problem.dimension);
  Vector g(problem.dimension);
  Vector v(problem.dimension);
  for (long k = 0; k < config.max_iterations; ++k) {
    const double gamma = 2.0 / static_cast<double>(k + 2);
    const double eta_k = static_cast<double>(k + 2) * eta / 2.0;
    y = (1.0 - gamma) * z + gamma * x;
    Stream stream = root.substream(static_cast<std::uint64_t>(k));
    problem.stochastic_oracle(y, stream, g);
    ++result.oracle_calls;
    v = x - eta_k * g;
    problem.prox_h(v, eta_k, x);
    check_finite(x, k, "iterate");
    check_membership(problem, x, k);
    z = (1.0 - gamma) * z + gamma * x;
    result.iterations_used = k + 1;
    if (tracker.observe(k + 1, z)) break;
  }
  result.output_point = z;
  result.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

RunResult run_solver(const CompositeProblem& problem, const SolverConfig& config) {
  switch (config.algorithm) {
    case Algorithm::SPGM: return run_spgm(problem, config);
    case Algorithm::SPGMA: return run_spgma(problem, config);
    case Algorithm::SPGMC: return run_spgmc(problem, config);
    case Algorithm::DeterministicBaseline: break;
  }
  throw ConfigError("run_solver does not run the deterministic baseline");
}

double default_clip_threshold(const CompositeProblem& problem, std::uint64_t seed, long draws,
                              double quantile) {
  if (draws < 1) throw ConfigError("clip calibration needs at least one draw");
  if (!(quantile > 0.0 && quantile <= 1.0)) throw ConfigError("clip quantile must lie in (0, 1]");
  const Stream root(seed);
  std::vector<double> norms(static_cast<std::size_t>(draws));
  Vector g(problem.dimension);
  for (long i = 0; i < draws; ++i) {
    Stream stream = root.substream(static_cast<std::uint64_t>(i));
    problem.stochastic_oracle(problem.feasible_start, stream, g);
    norms[static_cast<std::size_t>(i)] = g.norm();
  }
  const auto rank = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(draws))) - 1;
  std::nth_element(norms.begin(), norms.begin() + static_cast<std::ptrdiff_t>(rank), norms.end());
  const double tau = norms[rank];
  if (!(tau > 0.0) || !std::isfinite(tau)) throw NumericalError("degenerate clip threshold");
  return tau;
}

BaselineResult run_baseline(const CompositeProblem& problem, const BaselineOptions& options) {
  BaselineResult out;
  if (options.reference_F_star) {
    out.F_star = *options.reference_F_star;
    out.bypassed = true;
    return out;
  }
  if (problem.smoothness.nonsmooth > 0.0) {
    throw ConfigError("f is nonsmooth (M_f > 0): supply reference_F_star instead of running the baseline");
  }
  if (!problem.has_exact_subgradient()) {
    throw ConfigError("the baseline needs the exact gradient of f");
  }
  problem.validate();

  const int n = problem.dimension;
  Vector x = problem.feasible_start;
  Vector x_next(n);
  Vector y = x;
  Vector g(n);
  Vector v(n);
  Vector d(n);
  double t = 1.0;
  double L = problem.smoothness.lipschitz > 0.0 ? problem.smoothness.lipschitz : 1.0;
  double F_x = evaluate_F(problem, x);
  out.F_star = F_x;
  out.minimizer = x;
  out.mapping_norm = std::numeric_limits<double>::infinity();

  for (long it = 0; it < options.max_iterations; ++it) {
    out.iterations = it + 1;
    problem.exact_subgradient(y, g);
    const double f_y = problem.f_value(y);
    for (;;) {
      v = y - g / L;
      problem.prox_h(v, 1.0 / L, x_next);
      d = x_next - y;
      const double model = f_y + g.dot(d) + 0.5 * L * d.squaredNorm();
      if (problem.f_value(x_next) <= model + 1e-14 * std::max(1.0, std::abs(f_y))) break;
      L *= 2.0;
      if (!std::isfinite(L)) throw NumericalError("baseline backtracking diverged");
    }
    out.mapping_norm = L * d.norm();
    const double F_next = evaluate_F(problem, x_next);
    if (F_next < out.F_star) {
      out.F_star = F_next;
      out.minimizer = x_next;
    }
    if (out.mapping_norm <= options.tolerance) {
      // Near the optimum F differences are rounding noise; the stationary point is the better answer.
      out.F_star = F_next;
      out.minimizer = x_next;
      break;
    }
    if (F_next > F_x && t > 1.0) {
      // Function-value restart: drop the momentum and retry from x. A plain
      // step (t == 1) is accepted even when rounding makes F tick upward.
      t = 1.0;
      y = x;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x_next + ((t - 1.0) / t_next) * (x_next - x);
    x.swap(x_next);
    F_x = F_next;
    t = t_next;
    L *= 0.95;
  }
  return out;
}

}  // namespace htprox
