#include "htprox/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "htprox/rng.hpp"

namespace htprox::kernels {
namespace {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

inline double sign(double t) { return (t > 0.0) - (t < 0.0); }

inline double link_term(double r, const LinkParams& link) {
  const double a = std::abs(r);
  return 0.5 * r * r + std::pow(a, link.p) / link.p + link.l1_weight * a;
}

inline double link_derivative(double r, const LinkParams& link) {
  const double s = sign(r);
  return r + s * std::pow(std::abs(r), link.p - 1.0) + link.l1_weight * s;
}

double block_sum(std::span<const double> r, std::size_t begin, std::size_t end, const LinkParams& link) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += link_term(r[i], link);
  return s;
}

std::size_t block_count(std::size_t n) { return (n + kBlock - 1) / kBlock; }

// One trial of the tail experiment. Shared by both implementations so that
// they differ only in the loop over trials.
void tail_trial(const TailCountSpec& spec, long trial, std::span<const double> thresholds,
                std::span<long> counts) {
  Stream stream = Stream(spec.seed).substream(static_cast<std::uint64_t>(trial));
  const double inv_alpha = 1.0 / spec.alpha;
  double sum = 0.0;
  long done = 0;
  const std::size_t nm = spec.multipliers.size();
  for (std::size_t h = 0; h < spec.horizons.size(); ++h) {
    for (; done < spec.horizons[h]; ++done) {
      const double x = -std::log(stream.uniform_open()) / spec.rate;
      const double s = stream.uniform() < 0.5 ? -1.0 : 1.0;
      sum += spec.scale * s * std::pow(x, inv_alpha);
    }
    for (std::size_t m = 0; m < nm; ++m) {
      if (sum > thresholds[h * nm + m]) ++counts[h * nm + m];
    }
  }
}

std::vector<double> tail_thresholds(const TailCountSpec& spec) {
  std::vector<double> t;
  t.reserve(spec.horizons.size() * spec.multipliers.size());
  for (long K : spec.horizons) {
    for (double omega : spec.multipliers) {
      t.push_back(omega * spec.scale * std::pow(static_cast<double>(K), 1.0 / spec.alpha));
    }
  }
  return t;
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void gemv(MatrixView a, std::span<const double> x, std::span<double> y) {
  const auto rows = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(static) if (a.rows * a.cols >= kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    y[static_cast<std::size_t>(i)] = dot(a.row(static_cast<std::size_t>(i)), x);
  }
}

void residual(MatrixView a, std::span<const double> x, std::span<const double> b, std::span<double> r) {
  const auto rows = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(static) if (a.rows * a.cols >= kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto k = static_cast<std::size_t>(i);
    r[k] = dot(a.row(k), x) - b[k];
  }
}

void link_gradient(std::span<const double> r, LinkParams link, std::span<double> w) {
  const auto n = static_cast<std::ptrdiff_t>(r.size());
#pragma omp parallel for schedule(static) if (r.size() >= kParallelThreshold / 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] = link_derivative(r[static_cast<std::size_t>(i)], link);
  }
}

double link_value(std::span<const double> r, LinkParams link) {
  const std::size_t blocks = block_count(r.size());
  std::vector<double> partial(blocks, 0.0);
  const auto nb = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static) if (r.size() >= kParallelThreshold / 16)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    const auto begin = static_cast<std::size_t>(b) * kBlock;
    const auto end = std::min(r.size(), begin + kBlock);
    partial[static_cast<std::size_t>(b)] = block_sum(r, begin, end, link);
  }
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

TailCounts tail_counts(const TailCountSpec& spec) {
  const std::vector<double> thresholds = tail_thresholds(spec);
  TailCounts counts(thresholds.size(), 0);
#pragma omp parallel
  {
    TailCounts local(thresholds.size(), 0);
#pragma omp for schedule(static)
    for (long t = 0; t < spec.trials; ++t) tail_trial(spec, t, thresholds, local);
#pragma omp critical
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += local[i];
  }
  return counts;
}

namespace serial {

void gemv(MatrixView a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < a.rows; ++i) y[i] = dot(a.row(i), x);
}

void residual(MatrixView a, std::span<const double> x, std::span<const double> b, std::span<double> r) {
  for (std::size_t i = 0; i < a.rows; ++i) r[i] = dot(a.row(i), x) - b[i];
}

void link_gradient(std::span<const double> r, LinkParams link, std::span<double> w) {
  for (std::size_t i = 0; i < r.size(); ++i) w[i] = link_derivative(r[i], link);
}

double link_value(std::span<const double> r, LinkParams link) {
  double total = 0.0;
  for (std::size_t begin = 0; begin < r.size(); begin += kBlock) {
    total += block_sum(r, begin, std::min(r.size(), begin + kBlock), link);
  }
  return total;
}

TailCounts tail_counts(const TailCountSpec& spec) {
  const std::vector<double> thresholds = tail_thresholds(spec);
  TailCounts counts(thresholds.size(), 0);
  for (long t = 0; t < spec.trials; ++t) tail_trial(spec, t, thresholds, counts);
  return counts;
}

}  // namespace serial
}  // namespace htprox::kernels
