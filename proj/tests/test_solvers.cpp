#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "doctest.h"
#include "htprox/errors.hpp"
#include "htprox/harness.hpp"
#include "htprox/problems.hpp"
#include "htprox/schedule.hpp"
#include "htprox/solvers.hpp"
#include "support.hpp"

using namespace htprox;

namespace {

SolverConfig constant(Algorithm alg, double eta, long K, std::uint64_t seed = 1) {
  SolverConfig c;
  c.algorithm = alg;
  c.step = ConstantStep{eta};
  c.max_iterations = K;
  c.seed = seed;
  if (alg == Algorithm::SPGMC) c.clip_threshold = std::numeric_limits<double>::infinity();
  return c;
}

// Wraps the oracle so every query point is appended to `seen`.
CompositeProblem recording(CompositeProblem p, std::shared_ptr<std::vector<Vector>> seen) {
  auto inner = p.stochastic_oracle;
  p.stochastic_oracle = [inner, seen](const Vector& x, Stream& s, Vector& g) {
    seen->push_back(x);
    inner(x, s, g);
  };
  return p;
}

// f(x) = 1/2 |Ax - b|^2 over the box [-1, 1]^n with b = A x*.
CompositeProblem least_squares_box(int m, int n, std::uint64_t seed) {
  Stream s(seed);
  Matrix A(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = s.normal() / std::sqrt(static_cast<double>(m));
  const Vector xs = testsupport::random_vector(s, n, -0.5, 0.5);
  const Vector b = A * xs;
  auto box = std::make_shared<BoxL1Prox>(BoxL1Prox{Vector::Constant(n, -1), Vector::Constant(n, 1), 0.0});
  CompositeProblem p;
  p.dimension = n;
  p.name = "least_squares_box";
  p.exact_subgradient = [A, b](const Vector& x, Vector& g) { g = A.transpose() * (A * x - b); };
  p.stochastic_oracle = [A, b](const Vector& x, Stream&, Vector& g) { g = A.transpose() * (A * x - b); };
  p.f_value = [A, b](const Vector& x) { return 0.5 * (A * x - b).squaredNorm(); };
  p.h_value = [](const Vector&) { return 0.0; };
  p.prox_h = [box](const Vector& v, double eta, Vector& out) { box->apply(v, eta, out); };
  p.in_domain = [box](const Vector& x) { return box->contains(x); };
  const double s2 = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()[0];
  p.smoothness.lipschitz = s2 * s2;
  p.domain_diameter = 2.0 * std::sqrt(static_cast<double>(n));
  p.feasible_start = Vector::Constant(n, 1.0);
  return p;
}

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("noiseless quadratic: geometric iterates and the averaged output") {
  Stream s(8);
  const Vector c = testsupport::random_vector(s, 5, -1, 1);
  auto seen = std::make_shared<std::vector<Vector>>();
  const auto p = recording(testsupport::shifted_quadratic(c, 10.0), seen);
  const long K = 100;
  const auto r = run_spgm(p, constant(Algorithm::SPGM, 0.25, K));
  // The oracle is queried at x^0..x^{K-1}; x^k - c = 0.75^k (x^0 - c).
  REQUIRE(seen->size() == static_cast<std::size_t>(K));
  const Vector x0 = p.feasible_start;
  for (long k = 0; k < K; ++k) {
    const Vector expect = c + std::pow(0.75, k) * (x0 - c);
    REQUIRE(((*seen)[k] - expect).norm() <= 1e-12);
  }
  const Vector xK = c + std::pow(0.75, K) * (x0 - c);
  CHECK(0.5 * (xK - c).squaredNorm() <= 1e-6);
  double w = 0.0;
  for (long k = 1; k <= K; ++k) w += std::pow(0.75, k);
  const Vector z_expect = c + (w / K) * (x0 - c);
  CHECK((r.output_point - z_expect).norm() <= 1e-12);
  CHECK(r.iterations_used == K);
  CHECK(r.oracle_calls == K);
}

TEST_CASE("absolute value in 1-D follows the clamped sign recursion") {
  for (double eta : {0.3, 0.07}) {
    const auto p = testsupport::absolute_value_1d(1.0);
    const long K = 400;
    const auto r = run_spgm(p, constant(Algorithm::SPGM, eta, K));
    double x = 1.0, sum = 0.0;
    for (long k = 0; k < K; ++k) {
      const double sg = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
      x = std::clamp(x - eta * sg, -1.0, 1.0);
      sum += x;
    }
    CHECK(r.output_point[0] == doctest::Approx(sum / K).epsilon(1e-12));
    CHECK(std::abs(r.output_point[0]) <= eta);
  }
}

TEST_CASE("expectation guarantee of the vanilla method end to end") {
  // f(x) = x^2/2 + |x|/2 on [-1, 1]: L_f = 1, M_f = 1. Gaussian noise: sigma = 1, alpha = 2. D_h = 2.
  auto box = std::make_shared<BoxL1Prox>(BoxL1Prox{Vector::Constant(1, -1), Vector::Constant(1, 1), 0.0});
  CompositeProblem p;
  p.dimension = 1;
  auto sub = [](const Vector& x, Vector& g) {
    g.resize(1);
    g[0] = x[0] + 0.5 * (x[0] > 0 ? 1.0 : (x[0] < 0 ? -1.0 : 0.0));
  };
  p.exact_subgradient = sub;
  p.stochastic_oracle = [sub](const Vector& x, Stream& s, Vector& g) {
    sub(x, g);
    g[0] += s.normal();
  };
  p.f_value = [](const Vector& x) { return 0.5 * x[0] * x[0] + 0.5 * std::abs(x[0]); };
  p.h_value = [](const Vector&) { return 0.0; };
  p.prox_h = [box](const Vector& v, double eta, Vector& out) { box->apply(v, eta, out); };
  p.in_domain = [box](const Vector& x) { return box->contains(x); };
  p.smoothness = {1.0, 0.0, 0.5, 1.0};
  p.noise = {1.0, 2.0};
  p.domain_diameter = 2.0;
  p.feasible_start = Vector::Constant(1, 1.0);

  ScheduleInputs in{p.smoothness, p.noise, p.domain_diameter};
  const double eps = 0.3;
  const auto plan = make_plan(Algorithm::SPGM, GuaranteeMode::Expectation, in, eps, 0.05);
  CHECK(plan.K == k_bound(Theorem::T21i, in, eps));
  CHECK(plan.eta == spgm_step(in, plan.K, eps).eta);
  double gap = 0.0;
  for (std::uint64_t t = 0; t < 50; ++t) {
    SolverConfig c;
    c.algorithm = Algorithm::SPGM;
    c.step = plan;
    c.max_iterations = plan.K;
    c.seed = 1000 + t;
    c.trace_cadence = plan.K;
    gap += evaluate_F(p, run_spgm(p, c).output_point);
  }
  CHECK(gap / 50.0 <= 1.5 * eps);
}

TEST_CASE("accelerated method: first step collapses the averaging") {
  Stream s(2);
  const Vector c = testsupport::random_vector(s, 4, -3, 3);
  const auto p = testsupport::shifted_quadratic(c, 1.0);
  const double eta = 0.2;
  const auto r = run_spgma(p, constant(Algorithm::SPGMA, eta, 1));
  // gamma_0 = 1 and eta_0 = eta: z^1 = x^1 = prox(x^0 - eta (x^0 - c)).
  Vector g, x1;
  p.exact_subgradient(p.feasible_start, g);
  p.prox_h(p.feasible_start - eta * g, eta, x1);
  CHECK((r.output_point.array() == x1.array()).all());
}

TEST_CASE("accelerated method on noiseless least squares decays like 1/K^2") {
  const auto p = least_squares_box(20, 20, 5);
  const double eta = 1.0 / (4.0 * p.smoothness.lipschitz);
  std::vector<double> Ks, gaps;
  for (long K = 32; K <= 1024; K *= 2) {
    const auto r = run_spgma(p, constant(Algorithm::SPGMA, eta, K));
    Ks.push_back(static_cast<double>(K));
    gaps.push_back(evaluate_F(p, r.output_point));
  }
  const auto fit = fit_loglog(Ks, gaps);
  MESSAGE("slope " << fit.slope << " gaps " << gaps.front() << " .. " << gaps.back());
  CHECK(fit.slope <= -1.7);
}

TEST_CASE("every query and output point is feasible") {
  for (auto family : {Family::BoxL1Regression, Family::BallResidualRegression}) {
    InstanceSpec spec = family == Family::BoxL1Regression ? InstanceSpec::box_l1(15, 100.0, 1.2, 3)
                                                          : InstanceSpec::ball_residual(15, 100.0, 1.2, 3);
    spec.bound = 1.0;
    const auto inst = generate_instance(spec);
    for (auto alg : {Algorithm::SPGM, Algorithm::SPGMA, Algorithm::SPGMC}) {
      auto seen = std::make_shared<std::vector<Vector>>();
      const auto p = recording(inst.problem, seen);
      auto cfg = constant(alg, 0.5 / p.smoothness.lipschitz, 300);
      if (alg == Algorithm::SPGMC) cfg.clip_threshold = 50.0;
      const auto r = run_solver(p, cfg);
      for (const auto& y : *seen) REQUIRE(inst.problem.in_domain(y));
      CHECK(inst.problem.in_domain(r.output_point));
      CHECK(r.oracle_calls == r.iterations_used);
    }
  }
}

TEST_CASE("infinite clip threshold reproduces the vanilla method") {
  const auto inst = generate_instance(InstanceSpec::box_l1(20, 1.0, 1.5, 4));
  auto a = constant(Algorithm::SPGM, 0.1 / inst.problem.smoothness.lipschitz, 500, 77);
  auto b = a;
  b.algorithm = Algorithm::SPGMC;
  b.clip_threshold = std::numeric_limits<double>::infinity();
  a.trace_cadence = b.trace_cadence = 25;
  const auto ra = run_spgm(inst.problem, a);
  const auto rb = run_spgmc(inst.problem, b);
  CHECK((ra.output_point.array() == rb.output_point.array()).all());
  REQUIRE(ra.gap_history.size() == rb.gap_history.size());
  for (std::size_t i = 0; i < ra.gap_history.size(); ++i) CHECK(ra.gap_history[i].value == rb.gap_history[i].value);
}

TEST_CASE("clipping halves a draw of norm 2 tau") {
  const double tau = 0.5;
  auto p = testsupport::shifted_quadratic(Vector::Zero(2), 100.0);
  Vector g_fixed(2);
  g_fixed << 0.6, 0.8;  // unit norm = 2 tau
  p.stochastic_oracle = [g_fixed](const Vector&, Stream&, Vector& g) { g = g_fixed; };
  auto cfg = constant(Algorithm::SPGMC, 0.3, 1);
  cfg.clip_threshold = tau;
  const auto r = run_spgmc(p, cfg);
  CHECK((r.output_point - (p.feasible_start - 0.3 * g_fixed / 2.0)).norm() <= 1e-15);
}

TEST_CASE("runs are reproducible from the seed") {
  const auto inst = generate_instance(InstanceSpec::ball_residual(25, 1.0, 1.8, 6));
  for (auto alg : {Algorithm::SPGM, Algorithm::SPGMA, Algorithm::SPGMC}) {
    auto cfg = constant(alg, 0.05 / inst.problem.smoothness.lipschitz, 300, 1234);
    if (alg == Algorithm::SPGMC) cfg.clip_threshold = default_clip_threshold(inst.problem, 9);
    cfg.trace_cadence = 10;
    const auto r1 = run_solver(inst.problem, cfg);
    const auto r2 = run_solver(inst.problem, cfg);
    CHECK((r1.output_point.array() == r2.output_point.array()).all());
    REQUIRE(r1.gap_history.size() == r2.gap_history.size());
    for (std::size_t i = 0; i < r1.gap_history.size(); ++i) {
      CHECK(r1.gap_history[i].iteration == r2.gap_history[i].iteration);
      CHECK(r1.gap_history[i].value == r2.gap_history[i].value);
    }
    cfg.seed = 1235;
    CHECK((run_solver(inst.problem, cfg).output_point - r1.output_point).norm() > 0.0);
  }
}

TEST_CASE("noiseless descent on smooth fixtures") {
  for (auto kind : {FixtureKind::Quadratic, FixtureKind::Mixed}) {
    FixtureOptions opt;
    opt.holder = 0.0;
    opt.nonsmooth = 0.0;
    opt.lipschitz = 3.0;
    const auto inst = generate_fixture(kind, 10, 21, opt);
    auto seen = std::make_shared<std::vector<Vector>>();
    const auto p = recording(inst.problem, seen);
    run_spgm(p, constant(Algorithm::SPGM, 1.0 / (4.0 * p.smoothness.lipschitz), 200));
    for (std::size_t k = 1; k < seen->size(); ++k)
      REQUIRE(evaluate_F(p, (*seen)[k]) <= evaluate_F(p, (*seen)[k - 1]) + 1e-15);
  }
}

TEST_CASE("gap target stops early and counts oracle calls") {
  const auto inst = generate_fixture(FixtureKind::Quadratic, 5, 1, FixtureOptions{.spectrum_floor = 0.1});
  for (auto alg : {Algorithm::SPGM, Algorithm::SPGMA, Algorithm::SPGMC}) {
    auto cfg = constant(alg, 0.25, 100000);
    cfg.gap_target = GapTarget{0.0, 1e-4};
    cfg.trace_cadence = 7;
    const auto r = run_solver(inst.problem, cfg);
    CHECK(r.terminated_by == Termination::GapTarget);
    CHECK(r.iterations_used < 100000);
    CHECK(r.iterations_used % 7 == 0);
    CHECK(r.oracle_calls == r.iterations_used);
    const double F0 = evaluate_F(inst.problem, inst.problem.feasible_start);
    CHECK(evaluate_F(inst.problem, r.output_point) / F0 < 1e-4);
  }
}

TEST_CASE("configuration and numerical errors") {
  const auto p = testsupport::shifted_quadratic(Vector::Zero(2), 1.0);
  auto cfg = constant(Algorithm::SPGMC, 0.1, 10);
  cfg.clip_threshold.reset();
  CHECK_THROWS_AS(run_spgmc(p, cfg), ConfigError);
  cfg = constant(Algorithm::SPGM, 0.1, 10);
  cfg.clip_threshold = 1.0;
  CHECK_THROWS_AS(run_spgm(p, cfg), ConfigError);
  cfg = constant(Algorithm::SPGM, 0.1, 10);
  cfg.trace_cadence = 0;
  CHECK_THROWS_AS(run_spgm(p, cfg), ConfigError);
  cfg = constant(Algorithm::SPGM, 0.0, 10);
  CHECK_THROWS_AS(run_spgm(p, cfg), ConfigError);
  CHECK_THROWS_AS(run_spgma(p, constant(Algorithm::SPGM, 0.1, 10)), ConfigError);

  auto blow = p;
  blow.stochastic_oracle = [](const Vector& x, Stream&, Vector& g) {
    g = x;
    g[0] = std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS_AS(run_spgm(blow, constant(Algorithm::SPGM, 0.1, 10)), NumericalError);
}

TEST_CASE("clip threshold calibration") {
  auto p = testsupport::shifted_quadratic(Vector::Zero(3), 1.0);
  p.stochastic_oracle = [](const Vector&, Stream& s, Vector& g) {
    g = Vector::Zero(3);
    g[0] = 1.0 + s.uniform();
  };
  const double tau = default_clip_threshold(p, 3, 10000, 0.99);
  CHECK(tau == doctest::Approx(1.99).epsilon(0.005));
  CHECK(default_clip_threshold(p, 3, 10000, 1.0) <= 2.0);
  CHECK_THROWS_AS(default_clip_threshold(p, 3, 0), ConfigError);
}

TEST_CASE("baseline matches an active-set solution of a box QP") {
  // min 1/2 x'Qx - q'x on [l, u]^5, solved by enumerating which bounds are active.
  const int n = 5;
  Stream s(41);
  Eigen::MatrixXd B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = s.normal();
  const Eigen::MatrixXd Q = B.transpose() * B + 0.5 * Eigen::MatrixXd::Identity(n, n);
  const Vector q = 3.0 * testsupport::random_vector(s, n, -1, 1);
  const double lo = -0.4, hi = 0.6;

  Vector best;
  double best_val = INFINITY;
  int states = 1;
  for (int i = 0; i < n; ++i) states *= 3;
  for (int code = 0; code < states; ++code) {
    std::array<int, 5> st{};  // 0 free, 1 lower, 2 upper
    for (int i = 0, c = code; i < n; ++i, c /= 3) st[i] = c % 3;
    Vector x = Vector::Zero(n);
    std::vector<int> free;
    for (int i = 0; i < n; ++i) {
      if (st[i] == 0) free.push_back(i);
      if (st[i] == 1) x[i] = lo;
      if (st[i] == 2) x[i] = hi;
    }
    if (!free.empty()) {
      const int m = static_cast<int>(free.size());
      Eigen::MatrixXd Qf(m, m);
      Vector rhs(m);
      for (int a = 0; a < m; ++a) {
        rhs[a] = q[free[a]];
        for (int i = 0; i < n; ++i)
          if (st[i] != 0) rhs[a] -= Q(free[a], i) * x[i];
        for (int b = 0; b < m; ++b) Qf(a, b) = Q(free[a], free[b]);
      }
      const Vector xf = Qf.ldlt().solve(rhs);
      for (int a = 0; a < m; ++a) x[free[a]] = xf[a];
    }
    // KKT: feasibility and sign of the gradient on active bounds.
    const Vector g = Q * x - q;
    bool ok = true;
    for (int i = 0; i < n; ++i) {
      if (x[i] < lo - 1e-12 || x[i] > hi + 1e-12) ok = false;
      if (st[i] == 1 && g[i] < -1e-12) ok = false;
      if (st[i] == 2 && g[i] > 1e-12) ok = false;
    }
    const double val = 0.5 * x.dot(Q * x) - q.dot(x);
    if (ok && val < best_val) {
      best_val = val;
      best = x;
    }
  }
  REQUIRE(best.size() == n);

  auto box = std::make_shared<BoxL1Prox>(BoxL1Prox{Vector::Constant(n, lo), Vector::Constant(n, hi), 0.0});
  CompositeProblem p;
  p.dimension = n;
  p.exact_subgradient = [Q, q](const Vector& x, Vector& g) { g = Q * x - q; };
  p.stochastic_oracle = [Q, q](const Vector& x, Stream&, Vector& g) { g = Q * x - q; };
  p.f_value = [Q, q](const Vector& x) { return 0.5 * x.dot(Q * x) - q.dot(x); };
  p.h_value = [](const Vector&) { return 0.0; };
  p.prox_h = [box](const Vector& v, double eta, Vector& out) { box->apply(v, eta, out); };
  p.in_domain = [box](const Vector& x) { return box->contains(x); };
  p.smoothness.lipschitz = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q).eigenvalues().maxCoeff();
  p.domain_diameter = (hi - lo) * std::sqrt(5.0);
  p.feasible_start = Vector::Zero(n);
  const auto res = run_baseline(p);
  CHECK((res.minimizer - best).norm() <= 1e-8);
  CHECK(res.F_star == doctest::Approx(best_val).epsilon(1e-12));

  // Unconstrained version: the minimizer is Q^{-1} q.
  auto wide = p;
  auto big = std::make_shared<BoxL1Prox>(BoxL1Prox{Vector::Constant(n, -1e6), Vector::Constant(n, 1e6), 0.0});
  wide.prox_h = [big](const Vector& v, double eta, Vector& out) { big->apply(v, eta, out); };
  wide.in_domain = [big](const Vector& x) { return big->contains(x); };
  wide.domain_diameter = 2e6 * std::sqrt(5.0);
  const Vector closed = Q.ldlt().solve(q);
  const auto free_run = run_baseline(wide);
  CHECK((free_run.minimizer - closed).norm() <= 1e-8);
}

TEST_CASE("baseline bypass and refusal") {
  const auto ball = generate_instance(InstanceSpec::ball_residual(10, 1.0, 1.8, 2));
  CHECK_THROWS_AS(run_baseline(ball.problem), ConfigError);
  BaselineOptions opt;
  opt.reference_F_star = ball.F_star_reference;
  const auto r = run_baseline(ball.problem, opt);
  CHECK(r.bypassed);
  CHECK(r.F_star == 0.0);
  CHECK(r.minimizer.size() == 0);
}

}
