// Serial reference vs OpenMP kernels (and Eigen for gemv).
// Thread count follows OMP_NUM_THREADS.
#include <vector>

#include <Eigen/Dense>
#include <benchmark/benchmark.h>

#include "htprox/kernels.hpp"
#include "htprox/rng.hpp"

namespace k = htprox::kernels;

namespace {

struct Data {
  std::size_t n;
  std::vector<double> a, x, b, y;
  explicit Data(std::size_t n_) : n(n_), a(n_ * n_), x(n_), b(n_), y(n_) {
    htprox::Stream s(n_);
    for (auto& v : a) v = s.normal();
    for (auto& v : x) v = s.normal();
    for (auto& v : b) v = s.normal();
  }
  [[nodiscard]] k::MatrixView view() const { return {a.data(), n, n}; }
};

void BM_gemv_serial(benchmark::State& st) {
  Data d(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) {
    k::serial::gemv(d.view(), d.x, d.y);
    benchmark::DoNotOptimize(d.y.data());
  }
}

void BM_gemv_omp(benchmark::State& st) {
  Data d(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) {
    k::gemv(d.view(), d.x, d.y);
    benchmark::DoNotOptimize(d.y.data());
  }
}

void BM_gemv_eigen(benchmark::State& st) {
  const auto n = static_cast<Eigen::Index>(st.range(0));
  Data d(static_cast<std::size_t>(n));
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A(d.a.data(), n, n);
  Eigen::Map<const Eigen::VectorXd> x(d.x.data(), n);
  Eigen::VectorXd y(n);
  for (auto _ : st) {
    y.noalias() = A * x;
    benchmark::DoNotOptimize(y.data());
  }
}

std::vector<double> residuals(std::size_t m) {
  htprox::Stream s(m);
  std::vector<double> r(m);
  for (auto& v : r) v = 10.0 * s.normal();
  return r;
}

void BM_link_value_serial(benchmark::State& st) {
  const auto r = residuals(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(k::serial::link_value(r, {1.5, 0.1}));
}

void BM_link_value_omp(benchmark::State& st) {
  const auto r = residuals(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(k::link_value(r, {1.5, 0.1}));
}

k::TailCountSpec tail_spec(long trials) {
  k::TailCountSpec s;
  s.alpha = 1.5;
  s.rate = 1.5819767068693265;  // e / (e - 1)
  s.horizons = {16, 64, 256};
  s.multipliers = {1, 2, 3, 4};
  s.trials = trials;
  s.seed = 1;
  return s;
}

void BM_tail_counts_serial(benchmark::State& st) {
  const auto spec = tail_spec(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(k::serial::tail_counts(spec));
}

void BM_tail_counts_omp(benchmark::State& st) {
  const auto spec = tail_spec(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(k::tail_counts(spec));
}

}  // namespace

BENCHMARK(BM_gemv_serial)->Arg(100)->Arg(500)->Arg(1000);
BENCHMARK(BM_gemv_omp)->Arg(100)->Arg(500)->Arg(1000);
BENCHMARK(BM_gemv_eigen)->Arg(100)->Arg(500)->Arg(1000);
BENCHMARK(BM_link_value_serial)->Arg(1000)->Arg(100000);
BENCHMARK(BM_link_value_omp)->Arg(1000)->Arg(100000);
BENCHMARK(BM_tail_counts_serial)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_tail_counts_omp)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
