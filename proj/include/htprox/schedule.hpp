#pragma once

#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "htprox/core.hpp"

namespace htprox {

enum class Algorithm { SPGM, SPGMA, SPGMC, DeterministicBaseline };
enum class GuaranteeMode { Expectation, HighProbability };

/// The four iteration bounds: vanilla/accelerated x expectation/high probability.
enum class Theorem { T21i, T21ii, T31i, T31ii };

std::string to_string(Algorithm a);
std::string to_string(GuaranteeMode m);
std::string to_string(Theorem t);
Algorithm algorithm_from_string(const std::string& s);

/// Everything the step-size and iteration-bound formulas read.
struct ScheduleInputs {
  SmoothnessConstants smoothness;
  NoiseConstants noise;
  double diameter = 1.0;  // D_h

  void validate() const;
};

/// L(eps) = H^(2/(1+nu)) (4/eps)^((1-nu)/(1+nu)).
double inexact_lipschitz(double holder, double nu, double eps);

/// Lambda(eps)^2 = 8 (alpha-1)^2 (sigma/alpha)^(alpha/(alpha-1)) (8 D/eps)^((2-alpha)/(alpha-1)).
double lambda_sq(const NoiseConstants& noise, double diameter, double eps);

/// (1 + ln(2/delta))^(1/(alpha-1)) Lambda(eps)^2.
double lambda_tilde_sq(const NoiseConstants& noise, double diameter, double eps, double delta);

struct StepPair {
  double eta = 0.0;        // expectation mode
  double eta_tilde = 0.0;  // high-probability mode
};

/// Constant step of the vanilla method:
///   min{1/(4(L_f + L(eps))), D/sqrt(2K(M^2 + Lambda^2))}, and the same with
/// Lambda-tilde. A branch with a zero denominator is +inf.
StepPair spgm_step(const ScheduleInputs& in, long K, double eps, double delta = 0.05);

/// Base step of the accelerated method (used as eta_k = (k+2) eta / 2):
///   eta       = min{1/(4(L_f + L(eps/K))), D sqrt(6 / ((M^2+Lambda^2)(2K+3)(K+2)K))}
///   eta_tilde = min{1/(4(L_f + L(eps/K))), D sqrt(2 / ((M^2+Lambda~^2)(K+2)^2 K))}
StepPair spgma_steps(const ScheduleInputs& in, long K, double eps, double delta = 0.05);

/// Real-valued maximum of the theorem's listed terms, with no range checks on
/// eps or delta. Used directly by rate sweeps that invert the bound in K.
double k_bound_value(Theorem theorem, const ScheduleInputs& in, double eps, double delta);

/// ceil(k_bound_value); eps and delta must lie in (0, 1).
long k_bound(Theorem theorem, const ScheduleInputs& in, double eps, double delta = 0.05);

/// Smallest eps (to relative precision 1e-10) with k_bound_value(eps) <= K.
double epsilon_for_budget(Theorem theorem, const ScheduleInputs& in, long K, double delta = 0.05);

Theorem theorem_for(Algorithm algorithm, GuaranteeMode mode);

struct SchedulePlan {
  Algorithm algorithm = Algorithm::SPGM;
  GuaranteeMode mode = GuaranteeMode::Expectation;
  double epsilon = 0.1;
  double delta = 0.05;
  long K = 1;
  bool K_from_bound = false;  // K was set to the theorem's bound
  double L_eps = 0.0;         // L(eps) for SPGM, L(eps/K) for SPGM-A
  double Lambda_sq = 0.0;
  double LambdaTilde_sq = 0.0;
  double eta = 0.0;
  double eta_tilde = 0.0;

  /// Step for the plan's mode.
  [[nodiscard]] double step() const { return mode == GuaranteeMode::Expectation ? eta : eta_tilde; }
};

/// Theory-mode plan. Without K the budget is the theorem's bound and the step
/// is recomputed for it; with K (benchmark mode) that K is used as given.
/// SPGM-C plans with the SPGM formulas. eps must lie in (0, 1) without K and
/// be positive with K.
SchedulePlan make_plan(Algorithm algorithm, GuaranteeMode mode, const ScheduleInputs& in,
                       double eps, double delta, std::optional<long> K = std::nullopt);

void to_json(nlohmann::json& j, const SchedulePlan& plan);
void to_json(nlohmann::json& j, const ScheduleInputs& in);

}  // namespace htprox
