#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

// Dense kernels behind the regression oracles and the Monte Carlo checks.
//
// Every kernel has an OpenMP version (htprox::kernels) and a plain serial
// reference (htprox::kernels::serial). Both produce bit-identical results for
// any thread count: row loops are independent and reductions are taken over a
// fixed block partition in a fixed order.

namespace htprox::kernels {

/// Row-major dense matrix view.
struct MatrixView {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  [[nodiscard]] std::span<const double> row(std::size_t i) const { return {data + i * cols, cols}; }
};

/// Link of the residual objective
///   phi(r) = sum_i r_i^2 / 2 + |r_i|^p / p + l1_weight |r_i|.
struct LinkParams {
  double p = 1.5;
  double l1_weight = 0.0;
};

/// Parameters of the sub-Weibull martingale tail experiment: each sample is
/// scale * S * X^(1/alpha) with S a fair sign and X ~ Exp(rate).
struct TailCountSpec {
  double alpha = 2.0;
  double scale = 1.0;
  double rate = 1.0;
  std::vector<long> horizons;               // increasing partial-sum lengths
  std::vector<double> multipliers;          // Omega values
  long trials = 0;
  std::uint64_t seed = 0;
};

/// counts[h * multipliers.size() + m] = #trials whose partial sum over the
/// first horizons[h] samples exceeds multipliers[m] * scale * horizons[h]^(1/alpha).
using TailCounts = std::vector<long>;

// Rows per block for the parallel loops and the fixed reduction partition.
inline constexpr std::size_t kBlock = 64;
// Below this many matrix entries the parallel kernels run on one thread.
inline constexpr std::size_t kParallelThreshold = 1 << 16;

void gemv(MatrixView a, std::span<const double> x, std::span<double> y);
void residual(MatrixView a, std::span<const double> x, std::span<const double> b, std::span<double> r);
void link_gradient(std::span<const double> r, LinkParams link, std::span<double> w);
double link_value(std::span<const double> r, LinkParams link);
TailCounts tail_counts(const TailCountSpec& spec);

namespace serial {
void gemv(MatrixView a, std::span<const double> x, std::span<double> y);
void residual(MatrixView a, std::span<const double> x, std::span<const double> b, std::span<double> r);
void link_gradient(std::span<const double> r, LinkParams link, std::span<double> w);
double link_value(std::span<const double> r, LinkParams link);
TailCounts tail_counts(const TailCountSpec& spec);
}  // namespace serial

/// Number of OpenMP threads available to the parallel kernels (1 without OpenMP).
int max_threads();

}  // namespace htprox::kernels
