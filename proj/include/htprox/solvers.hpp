#pragma once

#include <cstdint>
#include <optional>
#include <variant>

#include "htprox/core.hpp"
#include "htprox/schedule.hpp"

namespace htprox {

/// Explicit base step: eta_k = eta for SPGM/SPGM-C, eta_k = (k+2) eta / 2 for SPGM-A.
struct ConstantStep {
  double eta = 0.0;
};

using StepRule = std::variant<SchedulePlan, ConstantStep>;

/// Stop once (F(z^k) - F*) / (F(x^0) - F*) < tolerance.
struct GapTarget {
  double reference_F_star = 0.0;
  double tolerance = 1e-4;
};

struct SolverConfig {
  Algorithm algorithm = Algorithm::SPGM;
  StepRule step = ConstantStep{};
  double step_multiplier = 1.0;  // scales the base step of either rule
  long max_iterations = 1000;
  std::optional<double> clip_threshold;  // SPGM-C only
  std::optional<GapTarget> gap_target;
  long trace_cadence = 1;  // F(z^k) is evaluated every trace_cadence iterations
  std::uint64_t seed = 0;

  void validate() const;
  [[nodiscard]] double base_step() const;
};

/// Algorithm 1 with a constant step: x^{k+1} = prox_{eta h}(x^k - eta G(x^k)),
/// z^{k+1} the eta-weighted running average of x^1..x^{k+1}.
RunResult run_spgm(const CompositeProblem& problem, const SolverConfig& config);

/// Accelerated method with gamma_k = 2/(k+2), eta_k = (k+2) eta / 2:
///   y^k = (1-gamma_k) z^k + gamma_k x^k
///   x^{k+1} = prox_{eta_k h}(x^k - eta_k G(y^k))
///   z^{k+1} = (1-gamma_k) z^k + gamma_k x^{k+1}
RunResult run_spgma(const CompositeProblem& problem, const SolverConfig& config);

/// SPGM with each oracle draw g replaced by g min(1, tau / |g|).
RunResult run_spgmc(const CompositeProblem& problem, const SolverConfig& config);

/// Dispatch on config.algorithm (baseline excluded).
RunResult run_solver(const CompositeProblem& problem, const SolverConfig& config);

/// Clip threshold: the given quantile of |G(x^0; xi)| over `draws` oracle draws.
double default_clip_threshold(const CompositeProblem& problem, std::uint64_t seed, long draws = 1000,
                              double quantile = 0.99);

struct BaselineOptions {
  double tolerance = 1e-9;  // on the prox-gradient mapping norm
  long max_iterations = 100000;
  std::optional<double> reference_F_star;  // known optimal value: bypass the solve
};

struct BaselineResult {
  double F_star = 0.0;
  Vector minimizer;  // empty when bypassed
  long iterations = 0;
  double mapping_norm = 0.0;
  bool bypassed = false;
};

/// Accelerated proximal gradient with backtracking and function-value restart
/// on the exact (sub)gradient. Refuses problems with M_f > 0 unless a
/// reference F* is supplied.
BaselineResult run_baseline(const CompositeProblem& problem, const BaselineOptions& options = {});

}  // namespace htprox
