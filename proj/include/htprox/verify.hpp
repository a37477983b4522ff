#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "htprox/core.hpp"
#include "htprox/noise.hpp"

namespace htprox {

struct CheckReport {
  std::string check_name;
  long trials = 0;
  long violations = 0;
  double worst_margin = 0.0;  // largest (observed - allowed); <= 0 means every trial held
  bool passed = true;         // violations == 0
  std::vector<std::string> details;

  void finish() { passed = violations == 0; }
};

void to_json(nlohmann::json& j, const CheckReport& report);

/// e^t - t - e^(|t|^alpha) <= 1e-12 on t = lo, lo + step, ..., hi for every alpha.
CheckReport check_exp_inequality(double lo = -50.0, double hi = 50.0, double step = 1e-3,
                                 const std::vector<double>& alphas = {1.01, 1.5, 2.0});

struct ConcentrationOptions {
  std::vector<double> omegas = {1.0, 2.0, 3.0, 4.0};
  std::vector<long> horizons = {16, 64, 256};
  long trials = 1'000'000;
  std::uint64_t seed = 0;
};

/// Tail of sum_{k<K} phi_k against exp{(1-alpha)(Omega/alpha)^(alpha/(alpha-1))} with
/// phi = scale S X^(1/alpha), S a fair sign and X ~ Exp(e/(e-1)), so that
/// E exp|phi/scale|^alpha = e. Passes iff every estimate <= bound + 3 standard errors.
/// Grid points with K below the bound's threshold are skipped and listed in details.
CheckReport check_concentration(double alpha, double scale, const ConcentrationOptions& options = {});

/// Quadrature of E exp|phi/scale|^alpha through the sampler's own transform; should equal e.
double weibull_construct_exp_moment(double alpha);

using ScalarSampler = std::function<double(Stream&)>;

struct SubWeibullOptions {
  long draws = 1'000'000;
  int decades = 3;             // sigma_min is tracked on draws/10^(decades-1), ..., draws
  double growth_limit = 1.25;  // per-decade growth of sigma_min treated as divergence
  double tolerance = 0.05;     // relative slack on e for the candidate sigma
  std::uint64_t seed = 0;
};

/// Monte Carlo check of E exp{|Y|^alpha / sigma^alpha} <= e for centered scalar noise Y.
/// Reports the smallest sigma meeting the bound on nested sample sizes; if that
/// value keeps growing with the sample size the exponential moment is treated
/// as infinite and the check fails regardless of sigma.
CheckReport check_sub_weibull_oracle(const std::string& name, const ScalarSampler& draw, double alpha,
                                     double sigma, const SubWeibullOptions& options = {});
CheckReport check_sub_weibull_oracle(const HeavyTailModel& model, double alpha, double sigma,
                                     const SubWeibullOptions& options = {});

ScalarSampler weibull_construct_sampler(double alpha, double scale);
ScalarSampler gaussian_sampler(double stddev);

/// c s^a t^(a-1) <= (a-1) c^(1/(a-1)) (8/e)^((2-a)/(a-1)) s^(a/(a-1)) t + e/8
/// on random (c, s, t, e) in (0, 10]^4; the comparison allows 1e-12 relative rounding.
CheckReport check_young_bound(long tuples = 10'000,
                              const std::vector<double>& alphas = {1.1, 1.25, 1.5, 1.75, 2.0},
                              std::uint64_t seed = 0);

/// min_{t in (0,c]} a/t + bt against t* = min{c, sqrt(a/b)} on a log grid over
/// [1e-8 c, c], and phi(t*) <= a/c + 2 sqrt(ab).
CheckReport check_quadratic_min(long tuples = 10'000, long grid_points = 1'000'000,
                                std::uint64_t seed = 0);

/// Kolmogorov-Smirnov test of the heavy-tail sampler against its CDF at level 0.05,
/// repeated `repetitions` times with independent streams; passes iff at least
/// `required` repetitions accept.
CheckReport check_sampler_ks(double omega, long draws = 10'000, int repetitions = 20, int required = 19,
                             std::uint64_t seed = 0);

/// Asymptotic Kolmogorov p-value for statistic d on n samples.
double kolmogorov_pvalue(double d, long n);

/// Sample mean of |xi|^alpha against omega B(alpha + 1, omega - alpha), relative tolerance.
CheckReport check_abs_moment(double omega, double alpha, long draws = 10'000'000, double tolerance = 0.1,
                             std::uint64_t seed = 0);

/// Minimizer of a convex 1-D function on [lo, hi]: grid scan, then ternary search
/// down to width tol. +inf marks points outside the domain. Throws
/// NumericalError when the samples are not convex.
double brute_force_argmin_1d(const std::function<double(double)>& phi, double lo, double hi,
                             int resolution = 1000, double tol = 1e-8);

/// Coordinate mode: argmin of sum_i phi(i, z_i) over the box [lo, hi].
Vector brute_force_prox_separable(const std::function<double(int, double)>& phi, const Vector& lo,
                                  const Vector& hi, int resolution = 1000, double tol = 1e-8);

/// Grid mode for dimension <= 3: nested 1-D searches (grid scan plus ternary
/// refinement) over the box [lo, hi], one coordinate per level. The objective
/// must be finite on the box; encode constraints with an exact penalty.
Vector brute_force_prox_grid(const std::function<double(const Vector&)>& objective, const Vector& lo,
                             const Vector& hi, int resolution = 40, double tol = 1e-9);

/// prox_box_l1 against the 1-D oracle on random scalar cases.
CheckReport check_prox_box_l1(long cases = 1000, double tolerance = 1e-5, std::uint64_t seed = 0);

/// prox_ball against the grid oracle in dimension 2 on random cases.
CheckReport check_prox_ball(long cases = 1000, double tolerance = 1e-5, std::uint64_t seed = 0);

/// Every check above at its default size.
std::vector<CheckReport> run_verify_suite(std::uint64_t seed);

}  // namespace htprox
