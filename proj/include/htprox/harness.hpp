#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "htprox/problems.hpp"
#include "htprox/schedule.hpp"
#include "htprox/solvers.hpp"

namespace htprox {

enum class StepRuleKind {
  Theory,       // SchedulePlan from the instance constants
  TheoremForm,  // the theorem's K-dependence with a tuned scale in place of D/sqrt(M^2 + Lambda^2)
  Lipschitz,    // eta = c / L_f
  Constant,     // eta given directly
};

std::string to_string(StepRuleKind k);
StepRuleKind step_rule_from_string(const std::string& s);

struct StepRuleSpec {
  StepRuleKind kind = StepRuleKind::Theory;
  GuaranteeMode mode = GuaranteeMode::Expectation;
  std::optional<double> epsilon;  // theory: absolute accuracy, default gap_tolerance (F(x0) - F*)
  std::optional<long> horizon;    // theory / theorem_form: planned K, default max_iterations
  double delta = 0.05;
  double c = 0.25;      // lipschitz, and the cap c / L_f of theorem_form
  double scale = 1.0;   // theorem_form
  double eta = 0.0;     // constant
  double multiplier = 1.0;
};

struct ClipSpec {
  std::optional<double> threshold;  // fixed tau; otherwise a quantile of |G(x0; xi)|
  double quantile = 0.99;
  long draws = 1000;
};

struct SolverSpec {
  std::string name;
  Algorithm algorithm = Algorithm::SPGM;
  StepRuleSpec step;
  ClipSpec clip;  // SPGM-C only
};

struct NoiseSetting {
  double rho = 1.0;
  double omega = 1.8;
};

struct ExperimentConfig {
  InstanceSpec instance;  // family, p, lambda, bound; n/rho/omega/seed come from the lists below
  std::vector<int> dimensions = {100};
  std::vector<NoiseSetting> noise = {{1.0, 1.8}};
  std::vector<SolverSpec> solvers;
  int trials = 10;
  double gap_tolerance = 1e-4;
  std::uint64_t master_seed = 0;
  long max_iterations = 100000;
  long trace_cadence = 10;
  std::string output_path = "results/experiment";
  int parallelism = 0;  // 0: OpenMP default

  void validate() const;
};

/// Parses one JSON document. Errors are ConfigError with "<source>:<line>: ..." messages.
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& source = "config");
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void to_json(nlohmann::json& j, const ExperimentConfig& config);

/// Line (1-based) of every value in a JSON text, keyed by JSON pointer.
std::vector<std::pair<std::string, int>> json_value_lines(const std::string& text);

struct TrialRecord {
  int n = 0;
  double rho = 0.0;
  double omega = 0.0;
  int trial = 0;
  std::string solver;
  long iterations = 0;
  bool converged = false;
  double final_gap = 0.0;
  double cpu_seconds = 0.0;
  double step = 0.0;
  std::string error;  // non-empty when the run aborted
};

struct AggregateRow {
  int n = 0;
  double rho = 0.0;
  double omega = 0.0;
  std::string solver;
  double mean_cpu_seconds = 0.0;
  double mean_iterations = 0.0;
  double std_iterations = 0.0;  // sample standard deviation, 0 for one trial
  int trials_converged = 0;
  int trials = 0;
};

struct ExperimentResult {
  std::vector<AggregateRow> rows;
  std::vector<TrialRecord> records;
  std::vector<std::string> warnings;
};

/// Worker count: HTPROX_THREADS if set, else config.parallelism, else the OpenMP default.
int resolve_threads(const ExperimentConfig& config);

/// Trial t of dimension n uses instance seed master_seed ^ t for every noise
/// setting, so settings share A, b and x*. Each solver run draws from its own
/// stream keyed by (master_seed, n, setting, trial, solver). Work items run on
/// `threads` workers (resolve_threads when 0) and land in fixed slots, so the
/// result does not depend on the worker count.
ExperimentResult run_experiment(const ExperimentConfig& config, int threads = 0);

/// Resolves a solver spec against one instance. F0 = F(x0).
SolverConfig build_solver_config(const SolverSpec& spec, const CompositeProblem& problem, double F_star,
                                 double F0, const ExperimentConfig& config, std::uint64_t seed);

/// "# schema=1" line, header, one line per row. Times are omitted when include_time is false.
std::string aggregate_csv(const std::vector<AggregateRow>& rows, bool include_time = true);
std::string trials_csv(const std::vector<TrialRecord>& records, bool include_time = true);

/// Writes <output>.csv, <output>_trials.csv and <output>.json; throws on I/O failure.
void write_experiment_outputs(const ExperimentConfig& config, const ExperimentResult& result);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least squares of log y on log x.
LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct SweepConfig {
  FixtureKind kind = FixtureKind::Quadratic;
  std::vector<Algorithm> algorithms = {Algorithm::SPGM, Algorithm::SPGMA};
  std::vector<long> K_grid = {64, 128, 256, 512, 1024, 2048, 4096};
  int seeds = 10;
  int n = 50;
  std::uint64_t master_seed = 0;
  FixtureOptions options;
};

struct SweepSeries {
  Algorithm algorithm = Algorithm::SPGM;
  std::vector<long> K;
  std::vector<double> mean_gap;
  std::vector<double> epsilon;  // accuracy the step plan was built for
  LineFit fit;
};

struct SweepResult {
  FixtureKind kind = FixtureKind::Quadratic;
  std::vector<SweepSeries> series;
};

/// For each K the step is the theory plan at K with eps inverted from the
/// algorithm's expectation bound (epsilon_for_budget), so the sweep follows
/// the theorem's own K-eps trade-off. Gap = F(z^K) - F* averaged over seeds.
SweepResult sweep_rates(const SweepConfig& config);

std::string sweep_csv(const SweepResult& result);
void to_json(nlohmann::json& j, const SweepResult& result);

}  // namespace htprox
