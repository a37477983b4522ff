#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "htprox/errors.hpp"
#include "htprox/harness.hpp"
#include "htprox/problems.hpp"
#include "htprox/schedule.hpp"
#include "htprox/verify.hpp"

using namespace htprox;
using nlohmann::json;

namespace {

int cmd_generate(const std::string& family, int n, double rho, double omega, std::uint64_t seed,
                 std::optional<double> p, std::optional<double> lambda, std::optional<double> bound,
                 const std::string& out) {
  const Family f = family_from_string(family);
  if (f == Family::SyntheticFixture) throw ConfigError("fixtures are regenerated from their seed, not saved");
  InstanceSpec spec = f == Family::BoxL1Regression ? InstanceSpec::box_l1(n, rho, omega, seed)
                                                   : InstanceSpec::ball_residual(n, rho, omega, seed);
  if (p) spec.p = *p;
  if (lambda) spec.lambda = *lambda;
  if (bound) spec.bound = *bound;
  const GeneratedInstance inst = generate_instance(spec);
  save_instance(inst, out);
  std::cout << instance_summary(inst).dump(2) << '\n';
  return 0;
}

int cmd_run(const std::string& config_path, std::optional<int> threads, std::optional<std::string> output) {
  ExperimentConfig config = load_experiment_config(config_path);
  if (output) config.output_path = *output;
  const ExperimentResult result = run_experiment(config, threads.value_or(0));
  for (const std::string& w : result.warnings) std::cerr << "warning: " << w << '\n';
  for (const TrialRecord& r : result.records) {
    if (!r.error.empty()) {
      std::cerr << "trial " << r.trial << " n=" << r.n << " rho=" << r.rho << " omega=" << r.omega << " "
                << r.solver << ": " << r.error << '\n';
    }
  }
  try {
    write_experiment_outputs(config, result);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  std::cout << aggregate_csv(result.rows);
  return 0;
}

int cmd_sweep(const std::string& fixture, const std::vector<std::string>& solvers, const std::vector<long>& K,
              int seeds, int n, std::uint64_t seed, double nu, const std::string& out) {
  SweepConfig config;
  config.kind = fixture_from_string(fixture);
  config.algorithms.clear();
  for (const std::string& s : solvers) config.algorithms.push_back(algorithm_from_string(s));
  if (!K.empty()) config.K_grid = K;
  config.seeds = seeds;
  config.n = n;
  config.master_seed = seed;
  config.options.nu = nu;
  const SweepResult result = sweep_rates(config);
  json summary = result;
  if (!out.empty()) {
    const std::filesystem::path stem(out);
    if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
    std::ofstream csv(stem.string() + ".csv");
    std::ofstream js(stem.string() + ".json");
    csv << sweep_csv(result);
    js << summary.dump(2) << '\n';
    if (!csv || !js) {
      std::cerr << "error: cannot write sweep output " << out << '\n';
      return 3;
    }
  }
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int cmd_verify(bool all, const std::vector<std::string>& checks, std::uint64_t seed) {
  std::vector<CheckReport> reports;
  if (all || checks.empty()) {
    reports = run_verify_suite(seed);
  } else {
    for (const std::string& c : checks) {
      if (c == "exp_inequality") {
        reports.push_back(check_exp_inequality());
      } else if (c == "concentration") {
        ConcentrationOptions o;
        o.seed = seed;
        reports.push_back(check_concentration(1.5, 1.0, o));
        reports.push_back(check_concentration(2.0, 1.0, o));
      } else if (c == "young_bound") {
        reports.push_back(check_young_bound(10'000, {1.1, 1.25, 1.5, 1.75, 2.0}, seed));
      } else if (c == "quadratic_min") {
        reports.push_back(check_quadratic_min(10'000, 1'000'000, seed));
      } else if (c == "prox") {
        reports.push_back(check_prox_box_l1(1000, 1e-5, seed));
        reports.push_back(check_prox_ball(1000, 1e-5, seed));
      } else if (c == "sampler") {
        reports.push_back(check_sampler_ks(1.5, 10'000, 20, 19, seed));
      } else {
        throw ConfigError("unknown check '" + c + "'");
      }
    }
  }
  bool ok = true;
  for (const CheckReport& r : reports) {
    std::cout << json(r).dump() << '\n';
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

struct ScheduleArgs {
  std::string alg = "spgm";
  std::string mode = "expectation";
  double Lf = 0.0, Hf = 0.0, nu = 0.5, Mf = 0.0, sigma = 0.0, alpha = 2.0, Dh = 1.0;
  double eps = 0.1, delta = 0.05;
  std::optional<long> K;
};

int cmd_schedule(const ScheduleArgs& a) {
  ScheduleInputs in;
  in.smoothness = {a.Lf, a.Hf, a.nu, a.Mf};
  in.noise = {a.sigma, a.alpha};
  in.diameter = a.Dh;
  in.validate();
  const Algorithm alg = algorithm_from_string(a.alg);
  GuaranteeMode mode = GuaranteeMode::Expectation;
  if (a.mode == "high_probability") {
    mode = GuaranteeMode::HighProbability;
  } else if (a.mode != "expectation") {
    throw ConfigError("mode must be 'expectation' or 'high_probability'");
  }
  json j;
  j["inputs"] = in;
  json bounds;
  for (Theorem t : {Theorem::T21i, Theorem::T21ii, Theorem::T31i, Theorem::T31ii}) {
    bounds[to_string(t)] = k_bound(t, in, a.eps, a.delta);
  }
  j["k_bounds"] = bounds;
  j["plan"] = make_plan(alg, mode, in, a.eps, a.delta, a.K);
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic proximal subgradient solvers under heavy-tailed noise"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Generate and save one regression instance");
  std::string family = "box_l1", gen_out = "instances/instance";
  int gen_n = 100;
  double rho = 1.0, omega = 1.8;
  std::uint64_t gen_seed = 0;
  std::optional<double> p, lambda, bound;
  gen->add_option("--family", family, "box_l1 or ball_residual");
  gen->add_option("--n", gen_n, "dimension");
  gen->add_option("--rho", rho, "noise scale");
  gen->add_option("--omega", omega, "tail index");
  gen->add_option("--seed", gen_seed, "instance seed");
  gen->add_option("--p", p, "residual exponent");
  gen->add_option("--lambda", lambda, "regularization weight");
  gen->add_option("--bound", bound, "box half-width or ball radius");
  gen->add_option("--out", gen_out, "output stem (<stem>.bin, <stem>.json)");

  auto* run = app.add_subcommand("run", "Run an experiment config");
  std::string config_path;
  std::optional<int> threads;
  std::optional<std::string> run_out;
  run->add_option("--config", config_path, "experiment JSON")->required();
  run->add_option("--threads", threads, "worker count (HTPROX_THREADS overrides the config too)");
  run->add_option("--output", run_out, "output stem, overriding the config");

  auto* sweep = app.add_subcommand("sweep", "Fit convergence-rate slopes on a fixture");
  std::string fixture = "quadratic", sweep_out;
  std::vector<std::string> sweep_solvers = {"spgm", "spgma"};
  std::vector<long> K_grid;
  int seeds = 10, sweep_n = 50;
  std::uint64_t sweep_seed = 0;
  double sweep_nu = 0.5;
  sweep->add_option("--fixture", fixture, "quadratic, nonsmooth, holder or mixed");
  sweep->add_option("--solvers", sweep_solvers, "solvers to sweep")->delimiter(',');
  sweep->add_option("--K", K_grid, "budgets (default 64..4096 in powers of two)")->delimiter(',');
  sweep->add_option("--seeds", seeds, "seeds per budget");
  sweep->add_option("--n", sweep_n, "fixture dimension");
  sweep->add_option("--seed", sweep_seed, "master seed");
  sweep->add_option("--nu", sweep_nu, "Hölder exponent of the fixture");
  sweep->add_option("--out", sweep_out, "output stem for CSV and JSON");

  auto* verify = app.add_subcommand("verify", "Run the lemma and oracle checks");
  bool all = false;
  std::vector<std::string> checks;
  std::uint64_t verify_seed = 0;
  verify->add_flag("--all", all, "run every check");
  verify->add_option("--check", checks,
                     "exp_inequality, concentration, young_bound, quadratic_min, prox, sampler")
      ->delimiter(',');
  verify->add_option("--seed", verify_seed, "seed");

  auto* sched = app.add_subcommand("schedule", "Print the step-size plan and iteration bounds");
  ScheduleArgs sa;
  sched->add_option("--alg", sa.alg, "spgm, spgma or spgmc");
  sched->add_option("--mode", sa.mode, "expectation or high_probability");
  sched->add_option("--Lf", sa.Lf, "Lipschitz constant L_f");
  sched->add_option("--Hf", sa.Hf, "Hölder constant H_f");
  sched->add_option("--nu", sa.nu, "Hölder exponent");
  sched->add_option("--Mf", sa.Mf, "nonsmooth constant M_f");
  sched->add_option("--sigma", sa.sigma, "noise level sigma");
  sched->add_option("--alpha", sa.alpha, "noise moment alpha");
  sched->add_option("--Dh", sa.Dh, "domain diameter D_h");
  sched->add_option("--eps", sa.eps, "target accuracy");
  sched->add_option("--delta", sa.delta, "failure probability");
  sched->add_option("--K", sa.K, "iteration budget (default: the theorem's bound)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*gen) return cmd_generate(family, gen_n, rho, omega, gen_seed, p, lambda, bound, gen_out);
    if (*run) return cmd_run(config_path, threads, run_out);
    if (*sweep) return cmd_sweep(fixture, sweep_solvers, K_grid, seeds, sweep_n, sweep_seed, sweep_nu, sweep_out);
    if (*verify) return cmd_verify(all, checks, verify_seed);
    if (*sched) return cmd_schedule(sa);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
