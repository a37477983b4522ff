#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <omp.h>

#include "doctest.h"
#include "htprox/kernels.hpp"
#include "htprox/rng.hpp"

using namespace htprox;
namespace k = htprox::kernels;

namespace {

struct Dense {
  std::size_t rows, cols;
  std::vector<double> a, x, b;
};

Dense random_dense(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Stream s(seed);
  Dense d{rows, cols, std::vector<double>(rows * cols), std::vector<double>(cols), std::vector<double>(rows)};
  for (auto& v : d.a) v = s.normal();
  for (auto& v : d.x) v = s.normal();
  for (auto& v : d.b) v = s.normal();
  return d;
}

// Runs fn with the given OpenMP team size and restores the previous one.
template <class F>
void with_threads(int n, F fn) {
  const int before = omp_get_max_threads();
  omp_set_num_threads(n);
  fn();
  omp_set_num_threads(before);
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{7, 5}, {300, 300}, {1000, 130}}) {
    const auto d = random_dense(rows, cols, rows * 31 + cols);
    const k::MatrixView view{d.a.data(), rows, cols};
    std::vector<double> y_ser(rows), r_ser(rows), w_ser(rows);
    k::serial::gemv(view, d.x, y_ser);
    k::serial::residual(view, d.x, d.b, r_ser);
    const k::LinkParams link{1.5, 0.1};
    k::serial::link_gradient(r_ser, link, w_ser);
    const double v_ser = k::serial::link_value(r_ser, link);
    for (int threads : {1, 2, 4, 7}) {
      with_threads(threads, [&] {
        std::vector<double> y(rows), r(rows), w(rows);
        k::gemv(view, d.x, y);
        k::residual(view, d.x, d.b, r);
        k::link_gradient(r, link, w);
        CHECK(y == y_ser);
        CHECK(r == r_ser);
        CHECK(w == w_ser);
        CHECK(k::link_value(r, link) == v_ser);
      });
    }
  }
}

TEST_CASE("long residual vectors reduce identically") {
  Stream s(4);
  std::vector<double> r(200000);
  for (auto& v : r) v = 3.0 * s.normal();
  const k::LinkParams link{1.3, 0.0};
  const double ref = k::serial::link_value(r, link);
  with_threads(4, [&] { CHECK(k::link_value(r, link) == ref); });
}

TEST_CASE("gemv agrees with Eigen") {
  const auto d = random_dense(120, 90, 3);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A(d.a.data(), 120, 90);
  Eigen::Map<const Eigen::VectorXd> x(d.x.data(), 90);
  const Eigen::VectorXd ref = A * x;
  std::vector<double> y(120);
  k::gemv({d.a.data(), 120, 90}, d.x, y);
  for (int i = 0; i < 120; ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-12).scale(ref.norm()));
}

TEST_CASE("link value and derivative by hand") {
  const std::vector<double> r = {2.0, -1.0, 0.0, 0.25};
  const k::LinkParams link{1.5, 0.5};
  double expected = 0.0;
  for (double t : r) expected += 0.5 * t * t + std::pow(std::abs(t), 1.5) / 1.5 + 0.5 * std::abs(t);
  CHECK(k::serial::link_value(r, link) == doctest::Approx(expected).epsilon(1e-15));
  std::vector<double> w(4);
  k::serial::link_gradient(r, link, w);
  CHECK(w[0] == doctest::Approx(2.0 + std::sqrt(2.0) + 0.5));
  CHECK(w[1] == doctest::Approx(-1.0 - 1.0 - 0.5));
  CHECK(w[2] == 0.0);
  CHECK(w[3] == doctest::Approx(0.25 + 0.5 + 0.5));
  // Central differences of the value match the derivative away from the kinks.
  for (double t : {0.7, -2.3, 5.0}) {
    const double h = 1e-6;
    const std::vector<double> p = {t + h}, m = {t - h};
    std::vector<double> g(1);
    k::serial::link_gradient(std::vector<double>{t}, link, g);
    CHECK((k::serial::link_value(p, link) - k::serial::link_value(m, link)) / (2 * h) ==
          doctest::Approx(g[0]).epsilon(1e-7));
  }
}

TEST_CASE("tail counts: serial equals parallel and matches a direct simulation") {
  k::TailCountSpec spec;
  spec.alpha = 1.5;
  spec.scale = 2.0;
  spec.rate = std::exp(1.0) / (std::exp(1.0) - 1.0);
  spec.horizons = {4, 16};
  spec.multipliers = {0.0, 1.0, 2.0};
  spec.trials = 20000;
  spec.seed = 99;
  const auto ref = k::serial::tail_counts(spec);
  for (int threads : {1, 3, 4}) with_threads(threads, [&] { CHECK(k::tail_counts(spec) == ref); });
  REQUIRE(ref.size() == 6);
  for (std::size_t h = 0; h < 2; ++h) {
    // Counts decrease in the multiplier; with multiplier 0 about half the sums are positive.
    CHECK(ref[h * 3] >= ref[h * 3 + 1]);
    CHECK(ref[h * 3 + 1] >= ref[h * 3 + 2]);
    CHECK(std::abs(ref[h * 3] / 20000.0 - 0.5) < 0.02);
  }
}

}
