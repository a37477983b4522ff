#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "htprox/rng.hpp"

namespace htprox {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Constants of the hybrid smoothness bound
///   |f'(y) - f'(x)| <= L |y-x| + H |y-x|^nu + M.
struct SmoothnessConstants {
  double lipschitz = 0.0;  // L_f
  double holder = 0.0;     // H_f
  double nu = 0.5;         // Hölder exponent, strictly inside (0, 1)
  double nonsmooth = 0.0;  // M_f

  void validate() const;
  [[nodiscard]] bool trivial() const { return lipschitz == 0.0 && holder == 0.0 && nonsmooth == 0.0; }
};

/// Moment bound E|G - EG|^alpha <= sigma^alpha on the oracle noise.
/// sigma == 0 is accepted and denotes an exact oracle.
struct NoiseConstants {
  double sigma = 0.0;
  double alpha = 2.0;  // in (1, 2]

  void validate() const;
};

/// One draw of G(x; xi) written into `out`. The stream is owned by the caller.
using StochasticOracle = std::function<void(const Vector& x, Stream& stream, Vector& out)>;
using SubgradientFn = std::function<void(const Vector& x, Vector& out)>;
using ValueFn = std::function<double(const Vector& x)>;
/// prox_{eta h}(v) written into `out`.
using ProxFn = std::function<void(const Vector& v, double eta, Vector& out)>;
using MembershipFn = std::function<bool(const Vector& x)>;

/// min f(x) + h(x) with f seen through a stochastic subgradient oracle and h
/// through its prox. h is split into a finite regularizer (h_value) and a
/// feasible set (in_domain); the prox handles both jointly.
///
/// Immutable after construction; every callable must be safe to invoke
/// concurrently.
struct CompositeProblem {
  int dimension = 0;
  StochasticOracle stochastic_oracle;
  SubgradientFn exact_subgradient;  // may be empty
  ValueFn f_value;
  ValueFn h_value;
  ProxFn prox_h;
  MembershipFn in_domain;
  SmoothnessConstants smoothness;
  NoiseConstants noise;
  double domain_diameter = 0.0;  // D_h
  Vector feasible_start;
  std::string name;

  void validate() const;
  [[nodiscard]] bool has_exact_subgradient() const { return static_cast<bool>(exact_subgradient); }
};

/// f(x) + h_value(x). Throws NumericalError naming the offending term when the
/// sum is not finite. Feasibility is not checked here.
double evaluate_F(const CompositeProblem& problem, const Vector& x);

enum class Termination { BudgetExhausted, GapTarget };

struct TracePoint {
  long iteration = 0;
  double value = 0.0;
};

struct RunResult {
  Vector output_point;
  long iterations_used = 0;
  long oracle_calls = 0;
  std::vector<TracePoint> gap_history;  // F values of the output sequence
  double wall_time = 0.0;               // seconds
  std::uint64_t seed = 0;
  Termination terminated_by = Termination::BudgetExhausted;
  double step_size = 0.0;  // base step actually used
};

std::string to_string(Termination t);

}  // namespace htprox
