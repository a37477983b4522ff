// Acceptance run: one PASS/FAIL line per criterion, details on stderr.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "htprox/harness.hpp"
#include "htprox/noise.hpp"
#include "htprox/problems.hpp"
#include "htprox/schedule.hpp"
#include "htprox/solvers.hpp"
#include "htprox/verify.hpp"

using namespace htprox;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int id, bool pass, double secs, const std::string& summary) {
  std::printf("criterion %d: %s (%.1f s) %s\n", id, pass ? "PASS" : "FAIL", secs, summary.c_str());
  std::fflush(stdout);
}

struct BundledRun {
  ExperimentConfig config;
  ExperimentResult result;
};

std::vector<BundledRun> bundled_runs;

bool criterion_1(const fs::path& configs, const fs::path& out) {
  bool ok = true;
  for (const char* name : {"box_l1_n100.json", "ball_residual_n100.json"}) {
    ExperimentConfig cfg = load_experiment_config(configs / name);
    cfg.output_path = (out / fs::path(name).stem()).string();
    auto res = run_experiment(cfg, 4);
    write_experiment_outputs(cfg, res);
    std::map<std::pair<double, double>, std::map<std::string, double>> iters;
    for (const auto& row : res.rows) iters[{row.rho, row.omega}][row.solver] = row.mean_iterations;
    for (const auto& [setting, by] : iters) {
      const double a = by.at("SPGM-A"), v = by.at("SPGM"), c = by.at("SPGM-C");
      const bool good = a < v && a < c;
      ok = ok && good;
      std::cerr << "  " << name << " rho=" << setting.first << " omega=" << setting.second
                << "  SPGM=" << v << " SPGM-A=" << a << " SPGM-C=" << c << (good ? "" : "  <- ordering violated")
                << "\n";
    }
    bundled_runs.push_back({cfg, std::move(res)});
  }
  return ok;
}

bool criterion_2(const fs::path& out) {
  struct Case {
    FixtureKind kind;
    Algorithm alg;
    double lo, hi;
  };
  const Case cases[] = {{FixtureKind::Quadratic, Algorithm::SPGMA, -2.25, -1.75},
                        {FixtureKind::Quadratic, Algorithm::SPGM, -1.3, -0.7},
                        {FixtureKind::Nonsmooth1D, Algorithm::SPGM, -0.75, -0.25},
                        {FixtureKind::HolderOnly, Algorithm::SPGMA, -INFINITY, -1.0}};
  bool ok = true;
  for (const auto& c : cases) {
    SweepConfig sc;
    sc.kind = c.kind;
    sc.algorithms = {c.alg};
    sc.seeds = 10;
    sc.options.nu = 0.5;
    const auto res = sweep_rates(sc);
    const double slope = res.series.at(0).fit.slope;
    const bool good = slope >= c.lo && slope <= c.hi;
    ok = ok && good;
    std::cerr << "  " << to_string(c.kind) << " " << to_string(c.alg) << " slope " << slope << " (R^2 "
              << res.series[0].fit.r_squared << ") target [" << c.lo << ", " << c.hi << "]\n";
    std::ofstream(out / ("sweep_" + to_string(c.kind) + "_" + to_string(c.alg) + ".csv")) << sweep_csv(res);
  }
  return ok;
}

bool criterion_3() {
  Stream draw(20240601);
  bool ok = true;
  for (int set = 0; set < 6; ++set) {
    FixtureOptions opt;
    opt.box = 0.5;
    opt.lipschitz = 2.0 * draw.uniform();
    opt.holder = 2.0 * draw.uniform();
    opt.nu = 0.2 + 0.6 * draw.uniform();
    opt.nonsmooth = draw.uniform();
    const HeavyTailModel noise{2.2 + 1.8 * draw.uniform(), 0.05 + 0.25 * draw.uniform()};
    opt.noise = noise;
    opt.noise_alpha = std::min(2.0, 1.5 + 0.5 * draw.uniform());
    for (double eps : {0.5, 0.2}) {
      for (Algorithm alg : {Algorithm::SPGM, Algorithm::SPGMA}) {
        double gap = 0.0;
        long K = 0;
        for (int t = 0; t < 50; ++t) {
          const auto inst = generate_fixture(FixtureKind::Mixed, 4, 1000 * set + t, opt);
          const ScheduleInputs in{inst.problem.smoothness, inst.problem.noise, inst.problem.domain_diameter};
          const auto plan = make_plan(alg, GuaranteeMode::Expectation, in, eps, 0.05);
          K = plan.K;
          SolverConfig sc;
          sc.algorithm = alg;
          sc.step = plan;
          sc.max_iterations = plan.K;
          sc.trace_cadence = plan.K;
          sc.seed = mix64(0xacce97ULL + 7919ULL * static_cast<std::uint64_t>(set * 100 + t));
          gap += evaluate_F(inst.problem, run_solver(inst.problem, sc).output_point) - *inst.F_star_reference;
        }
        gap /= 50.0;
        const bool good = gap <= 1.5 * eps;
        ok = ok && good;
        std::cerr << "  set " << set << " L=" << opt.lipschitz << " H=" << opt.holder << " nu=" << opt.nu
                  << " M=" << opt.nonsmooth << " omega=" << noise.omega << " rho=" << noise.rho
                  << " alpha=" << opt.noise_alpha << " eps=" << eps << " " << to_string(alg) << " K=" << K
                  << " mean gap " << gap << (good ? "" : "  <- above 1.5 eps") << "\n";
      }
    }
  }
  return ok;
}

bool all_pass(const std::vector<CheckReport>& reports) {
  bool ok = true;
  for (const auto& r : reports) {
    std::cerr << "  " << r.check_name << ": " << (r.passed ? "pass" : "FAIL") << " (" << r.violations << "/"
              << r.trials << ", worst margin " << r.worst_margin << ")\n";
    ok = ok && r.passed;
  }
  return ok;
}

bool criterion_4(std::uint64_t seed) {
  ConcentrationOptions conc;
  conc.seed = seed;
  return all_pass({check_exp_inequality(-50.0, 50.0, 1e-3, {1.01, 1.5, 2.0}),
                   check_young_bound(10'000, {1.1, 1.25, 1.5, 1.75, 2.0}, seed),
                   check_quadratic_min(10'000, 1'000'000, seed), check_concentration(1.5, 1.0, conc),
                   check_concentration(2.0, 1.0, conc)});
}

bool criterion_5(std::uint64_t seed) {
  std::vector<CheckReport> reports = {check_prox_box_l1(1000, 1e-5, seed), check_prox_ball(1000, 1e-5, seed),
                                      check_sampler_ks(1.8, 10'000, 20, 19, seed)};
  for (auto [omega, alpha] : {std::pair{3.0, 1.5}, std::pair{2.0, 1.2}, std::pair{1.5, 1.2}}) {
    reports.push_back(check_abs_moment(omega, alpha, 10'000'000, 0.1, seed));
  }
  return all_pass(reports);
}

bool criterion_6(const fs::path& configs) {
  if (bundled_runs.empty()) {
    for (const char* name : {"box_l1_n100.json", "ball_residual_n100.json"}) {
      const ExperimentConfig cfg = load_experiment_config(configs / name);
      bundled_runs.push_back({cfg, run_experiment(cfg, 4)});
    }
  }
  bool ok = true;
  for (const auto& run : bundled_runs) {
    const auto serial = run_experiment(run.config, 1);
    const bool same_rows = aggregate_csv(serial.rows, false) == aggregate_csv(run.result.rows, false);
    const bool same_trials = trials_csv(serial.records, false) == trials_csv(run.result.records, false);
    std::cerr << "  " << run.config.output_path << ": aggregate " << (same_rows ? "identical" : "DIFFERS")
              << ", per-trial " << (same_trials ? "identical" : "DIFFERS") << "\n";
    ok = ok && same_rows && same_trials;
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string configs = "configs";
  std::string out = "acceptance_out";
  std::vector<int> only;
  std::uint64_t seed = 7;
  app.add_option("--configs", configs, "directory holding the bundled experiment configs");
  app.add_option("--out", out, "directory for CSV outputs");
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
  app.add_option("--seed", seed, "seed of the verification checks");
  CLI11_PARSE(app, argc, argv);

  std::set<int> selected(only.begin(), only.end());
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6};
  fs::create_directories(out);

  int failures = 0;
  auto run = [&](int id, auto&& fn, const std::string& summary) {
    if (!selected.count(id)) return;
    std::cerr << "criterion " << id << ": " << summary << "\n";
    const auto t0 = Clock::now();
    bool pass = false;
    try {
      pass = fn();
    } catch (const std::exception& e) {
      std::cerr << "  error: " << e.what() << "\n";
    }
    report(id, pass, seconds_since(t0), summary);
    if (!pass) ++failures;
  };
  run(1, [&] { return criterion_1(configs, out); }, "SPGM-A fewest mean iterations on both families");
  run(2, [&] { return criterion_2(out); }, "rate slopes on noiseless fixtures");
  run(3, [] { return criterion_3(); }, "mean gap <= 1.5 eps at the theorem budgets");
  run(4, [&] { return criterion_4(seed); }, "lemma suites");
  run(5, [&] { return criterion_5(seed); }, "prox and noise oracles");
  run(6, [&] { return criterion_6(configs); }, "4 workers and serial give identical CSVs");
  return failures == 0 ? 0 : 1;
}
