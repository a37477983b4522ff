#include "htprox/harness.hpp"

#include <time.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "htprox/errors.hpp"
#include "htprox/rng.hpp"

namespace htprox {
namespace {

using nlohmann::json;

double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

std::string escape_pointer_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

// Reads one config document, reporting errors at the line of the offending value.
class ConfigReader {
 public:
  ConfigReader(const std::string& text, std::string source) : source_(std::move(source)) {
    for (auto& [pointer, line] : json_value_lines(text)) lines_.emplace(pointer, line);
  }

  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    int line = 1;
    std::string p = pointer;
    while (true) {
      auto it = lines_.find(p);
      if (it != lines_.end()) {
        line = it->second;
        break;
      }
      const auto cut = p.rfind('/');
      if (cut == std::string::npos) break;
      p = p.substr(0, cut);
    }
    throw ConfigError(source_ + ":" + std::to_string(line) + ": " + (pointer.empty() ? "/" : pointer) + ": " +
                      message);
  }

  template <typename T>
  T get(const json& j, const std::string& pointer, const char* expected) const {
    try {
      return j.get<T>();
    } catch (const json::exception&) {
      fail(pointer, std::string("expected ") + expected);
    }
  }

  void allow_keys(const json& j, const std::string& pointer, const std::set<std::string>& keys) const {
    if (!j.is_object()) fail(pointer, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!keys.count(it.key())) fail(pointer + "/" + escape_pointer_token(it.key()), "unknown key '" + it.key() + "'");
    }
  }

 private:
  std::string source_;
  std::map<std::string, int> lines_;
};

StepRuleSpec parse_step(const ConfigReader& r, const json& j, const std::string& ptr) {
  r.allow_keys(j, ptr, {"rule", "mode", "epsilon", "horizon", "delta", "c", "scale", "eta", "multiplier"});
  StepRuleSpec s;
  if (j.contains("rule")) {
    try {
      s.kind = step_rule_from_string(r.get<std::string>(j["rule"], ptr + "/rule", "a string"));
    } catch (const ConfigError& e) {
      r.fail(ptr + "/rule", e.what());
    }
  }
  if (j.contains("mode")) {
    const auto m = r.get<std::string>(j["mode"], ptr + "/mode", "a string");
    if (m == "expectation") {
      s.mode = GuaranteeMode::Expectation;
    } else if (m == "high_probability") {
      s.mode = GuaranteeMode::HighProbability;
    } else {
      r.fail(ptr + "/mode", "mode must be 'expectation' or 'high_probability'");
    }
  }
  if (j.contains("epsilon")) s.epsilon = r.get<double>(j["epsilon"], ptr + "/epsilon", "a number");
  if (j.contains("horizon")) s.horizon = r.get<long>(j["horizon"], ptr + "/horizon", "an integer");
  if (j.contains("delta")) s.delta = r.get<double>(j["delta"], ptr + "/delta", "a number");
  if (j.contains("c")) s.c = r.get<double>(j["c"], ptr + "/c", "a number");
  if (j.contains("scale")) s.scale = r.get<double>(j["scale"], ptr + "/scale", "a number");
  if (j.contains("eta")) s.eta = r.get<double>(j["eta"], ptr + "/eta", "a number");
  if (j.contains("multiplier")) s.multiplier = r.get<double>(j["multiplier"], ptr + "/multiplier", "a number");

  if (s.epsilon && !(*s.epsilon > 0.0)) r.fail(ptr + "/epsilon", "epsilon must be positive");
  if (s.horizon && *s.horizon < 1) r.fail(ptr + "/horizon", "horizon must be at least 1");
  if (!(s.delta > 0.0 && s.delta < 1.0)) r.fail(ptr + "/delta", "delta must lie in (0, 1)");
  if (!(s.c > 0.0)) r.fail(ptr + "/c", "c must be positive");
  if (!(s.scale > 0.0)) r.fail(ptr + "/scale", "scale must be positive");
  if (!(s.multiplier > 0.0)) r.fail(ptr + "/multiplier", "multiplier must be positive");
  if (s.kind == StepRuleKind::Constant && !(s.eta > 0.0)) r.fail(ptr + "/eta", "constant rule needs eta > 0");
  return s;
}

SolverSpec parse_solver(const ConfigReader& r, const json& j, const std::string& ptr) {
  r.allow_keys(j, ptr, {"name", "algorithm", "step", "clip"});
  SolverSpec s;
  if (!j.contains("algorithm")) r.fail(ptr, "solver needs an 'algorithm'");
  try {
    s.algorithm = algorithm_from_string(r.get<std::string>(j["algorithm"], ptr + "/algorithm", "a string"));
  } catch (const ConfigError& e) {
    r.fail(ptr + "/algorithm", e.what());
  }
  if (s.algorithm == Algorithm::DeterministicBaseline) r.fail(ptr + "/algorithm", "the baseline is not a benchmark solver");
  s.name = j.contains("name") ? r.get<std::string>(j["name"], ptr + "/name", "a string") : to_string(s.algorithm);
  if (j.contains("step")) s.step = parse_step(r, j["step"], ptr + "/step");
  if (j.contains("clip")) {
    if (s.algorithm != Algorithm::SPGMC) r.fail(ptr + "/clip", "clip settings are only valid for SPGM-C");
    const json& c = j["clip"];
    const std::string cp = ptr + "/clip";
    r.allow_keys(c, cp, {"threshold", "quantile", "draws"});
    if (c.contains("threshold")) s.clip.threshold = r.get<double>(c["threshold"], cp + "/threshold", "a number");
    if (c.contains("quantile")) s.clip.quantile = r.get<double>(c["quantile"], cp + "/quantile", "a number");
    if (c.contains("draws")) s.clip.draws = r.get<long>(c["draws"], cp + "/draws", "an integer");
    if (s.clip.threshold && !(*s.clip.threshold > 0.0)) r.fail(cp + "/threshold", "threshold must be positive");
    if (!(s.clip.quantile > 0.0 && s.clip.quantile <= 1.0)) r.fail(cp + "/quantile", "quantile must lie in (0, 1]");
    if (s.clip.draws < 1) r.fail(cp + "/draws", "draws must be positive");
  }
  return s;
}

std::vector<SolverSpec> default_solvers() {
  std::vector<SolverSpec> out;
  for (Algorithm a : {Algorithm::SPGM, Algorithm::SPGMA, Algorithm::SPGMC}) {
    SolverSpec s;
    s.algorithm = a;
    s.name = to_string(a);
    out.push_back(s);
  }
  return out;
}

std::string csv_number(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::uint64_t run_seed(std::uint64_t master, std::size_t n_index, std::size_t setting, int trial, std::size_t solver) {
  std::uint64_t h = mix64(master ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t part : {static_cast<std::uint64_t>(n_index), static_cast<std::uint64_t>(setting),
                             static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(solver)}) {
    h = mix64(h ^ (part + 0x9e3779b97f4a7c15ULL));
  }
  return h;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

std::string to_string(StepRuleKind k) {
  switch (k) {
    case StepRuleKind::Theory: return "theory";
    case StepRuleKind::TheoremForm: return "theorem_form";
    case StepRuleKind::Lipschitz: return "lipschitz";
    case StepRuleKind::Constant: return "constant";
  }
  return "?";
}

StepRuleKind step_rule_from_string(const std::string& s) {
  if (s == "theory") return StepRuleKind::Theory;
  if (s == "theorem_form") return StepRuleKind::TheoremForm;
  if (s == "lipschitz") return StepRuleKind::Lipschitz;
  if (s == "constant") return StepRuleKind::Constant;
  throw ConfigError("unknown step rule '" + s + "' (theory, theorem_form, lipschitz, constant)");
}

std::vector<std::pair<std::string, int>> json_value_lines(const std::string& text) {
  struct Frame {
    bool object;
    std::string key;
    long index;
  };
  std::vector<Frame> stack;
  std::vector<std::pair<std::string, int>> out;
  bool expect_key = false;
  int line = 1;
  auto pointer = [&] {
    std::string p;
    for (const Frame& f : stack) p += "/" + (f.object ? escape_pointer_token(f.key) : std::to_string(f.index));
    return p;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c)) || c == ':') continue;
    if (c == '"') {
      std::string s;
      for (++i; i < text.size() && text[i] != '"'; ++i) {
        if (text[i] == '\\' && i + 1 < text.size()) ++i;
        s += text[i];
      }
      if (!stack.empty() && stack.back().object && expect_key) {
        stack.back().key = s;
        expect_key = false;
      } else {
        out.emplace_back(pointer(), line);
      }
      continue;
    }
    if (c == '{' || c == '[') {
      out.emplace_back(pointer(), line);
      stack.push_back({c == '{', "", 0});
      expect_key = c == '{';
      continue;
    }
    if (c == '}' || c == ']') {
      if (!stack.empty()) stack.pop_back();
      expect_key = false;
      continue;
    }
    if (c == ',') {
      if (!stack.empty()) {
        if (stack.back().object) {
          expect_key = true;
        } else {
          ++stack.back().index;
        }
      }
      continue;
    }
    out.emplace_back(pointer(), line);
    while (i + 1 < text.size() && !std::isspace(static_cast<unsigned char>(text[i + 1])) &&
           text[i + 1] != ',' && text[i + 1] != ']' && text[i + 1] != '}') {
      ++i;
    }
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (!(gap_tolerance > 0.0 && gap_tolerance < 1.0)) throw ConfigError("gap_tolerance must lie in (0, 1)");
  if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
  if (trace_cadence < 1) throw ConfigError("trace_cadence must be at least 1");
  if (parallelism < 0) throw ConfigError("parallelism must be nonnegative");
  if (instance.family == Family::SyntheticFixture) throw ConfigError("experiments run on the regression families");
  for (int n : dimensions) {
    if (n < 1) throw ConfigError("dimensions must be positive");
  }
  for (const NoiseSetting& s : noise) HeavyTailModel{s.omega, s.rho}.validate();
  std::set<std::string> names;
  for (const SolverSpec& s : solvers) {
    if (!names.insert(s.name).second) throw ConfigError("duplicate solver name '" + s.name + "'");
  }
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n'));
    throw ConfigError(source + ":" + std::to_string(line) + ": invalid JSON: " + e.what());
  }
  const ConfigReader r(text, source);
  r.allow_keys(j, "", {"family", "p", "lambda", "bound", "n", "noise", "solvers", "trials", "gap_tolerance",
                       "master_seed", "max_iterations", "trace_cadence", "output", "parallelism"});
  ExperimentConfig c;
  Family family = Family::BoxL1Regression;
  if (j.contains("family")) {
    try {
      family = family_from_string(r.get<std::string>(j["family"], "/family", "a string"));
    } catch (const ConfigError& e) {
      r.fail("/family", e.what());
    }
  }
  if (family == Family::SyntheticFixture) r.fail("/family", "experiments run on the regression families");
  c.instance = family == Family::BallResidualRegression ? InstanceSpec::ball_residual(100, 1.0, 1.8, 0)
                                                        : InstanceSpec::box_l1(100, 1.0, 1.8, 0);
  if (j.contains("p")) c.instance.p = r.get<double>(j["p"], "/p", "a number");
  if (j.contains("lambda")) c.instance.lambda = r.get<double>(j["lambda"], "/lambda", "a number");
  if (j.contains("bound")) c.instance.bound = r.get<double>(j["bound"], "/bound", "a number");
  if (j.contains("n")) {
    const json& n = j["n"];
    c.dimensions = n.is_array() ? r.get<std::vector<int>>(n, "/n", "a list of integers")
                                : std::vector<int>{r.get<int>(n, "/n", "an integer")};
  }
  if (j.contains("noise")) {
    if (!j["noise"].is_array()) r.fail("/noise", "expected a list of {rho, omega} objects");
    c.noise.clear();
    for (std::size_t i = 0; i < j["noise"].size(); ++i) {
      const std::string ptr = "/noise/" + std::to_string(i);
      const json& s = j["noise"][i];
      r.allow_keys(s, ptr, {"rho", "omega"});
      if (!s.contains("rho") || !s.contains("omega")) r.fail(ptr, "noise setting needs rho and omega");
      NoiseSetting ns{r.get<double>(s["rho"], ptr + "/rho", "a number"),
                      r.get<double>(s["omega"], ptr + "/omega", "a number")};
      try {
        HeavyTailModel{ns.omega, ns.rho}.validate();
      } catch (const ConfigError& e) {
        r.fail(ptr, e.what());
      }
      c.noise.push_back(ns);
    }
  }
  if (j.contains("solvers")) {
    if (!j["solvers"].is_array()) r.fail("/solvers", "expected a list of solvers");
    for (std::size_t i = 0; i < j["solvers"].size(); ++i) {
      c.solvers.push_back(parse_solver(r, j["solvers"][i], "/solvers/" + std::to_string(i)));
    }
  } else {
    c.solvers = default_solvers();
  }
  if (j.contains("trials")) c.trials = r.get<int>(j["trials"], "/trials", "an integer");
  if (j.contains("gap_tolerance")) c.gap_tolerance = r.get<double>(j["gap_tolerance"], "/gap_tolerance", "a number");
  if (j.contains("master_seed")) c.master_seed = r.get<std::uint64_t>(j["master_seed"], "/master_seed", "an unsigned integer");
  if (j.contains("max_iterations")) c.max_iterations = r.get<long>(j["max_iterations"], "/max_iterations", "an integer");
  if (j.contains("trace_cadence")) c.trace_cadence = r.get<long>(j["trace_cadence"], "/trace_cadence", "an integer");
  if (j.contains("output")) c.output_path = r.get<std::string>(j["output"], "/output", "a string");
  if (j.contains("parallelism")) c.parallelism = r.get<int>(j["parallelism"], "/parallelism", "an integer");

  try {
    c.instance.validate();
  } catch (const ConfigError& e) {
    r.fail("", e.what());
  }
  static const std::map<std::string, std::string> field_of = {
      {"trials", "/trials"},           {"gap_tolerance", "/gap_tolerance"}, {"max_iterations", "/max_iterations"},
      {"trace_cadence", "/trace_cadence"}, {"parallelism", "/parallelism"}, {"dimensions", "/n"},
      {"duplicate", "/solvers"}};
  try {
    c.validate();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    std::string ptr;
    for (const auto& [word, p] : field_of) {
      if (msg.find(word) != std::string::npos) ptr = p;
    }
    r.fail(ptr, msg);
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), path.string());
}

void to_json(json& j, const ExperimentConfig& c) {
  j = json::object();
  j["family"] = to_string(c.instance.family);
  j["p"] = c.instance.p;
  j["lambda"] = c.instance.lambda;
  j["bound"] = c.instance.bound;
  j["n"] = c.dimensions;
  j["noise"] = json::array();
  for (const auto& s : c.noise) j["noise"].push_back({{"rho", s.rho}, {"omega", s.omega}});
  j["solvers"] = json::array();
  for (const auto& s : c.solvers) {
    json step{{"rule", to_string(s.step.kind)}, {"multiplier", s.step.multiplier}};
    switch (s.step.kind) {
      case StepRuleKind::Theory:
        step["mode"] = s.step.mode == GuaranteeMode::Expectation ? "expectation" : "high_probability";
        step["delta"] = s.step.delta;
        if (s.step.epsilon) step["epsilon"] = *s.step.epsilon;
        if (s.step.horizon) step["horizon"] = *s.step.horizon;
        break;
      case StepRuleKind::TheoremForm:
        step["c"] = s.step.c;
        step["scale"] = s.step.scale;
        if (s.step.horizon) step["horizon"] = *s.step.horizon;
        break;
      case StepRuleKind::Lipschitz: step["c"] = s.step.c; break;
      case StepRuleKind::Constant: step["eta"] = s.step.eta; break;
    }
    json solver{{"name", s.name}, {"algorithm", to_string(s.algorithm)}, {"step", step}};
    if (s.algorithm == Algorithm::SPGMC) {
      json clip{{"quantile", s.clip.quantile}, {"draws", s.clip.draws}};
      if (s.clip.threshold) clip["threshold"] = *s.clip.threshold;
      solver["clip"] = clip;
    }
    j["solvers"].push_back(solver);
  }
  j["trials"] = c.trials;
  j["gap_tolerance"] = c.gap_tolerance;
  j["master_seed"] = c.master_seed;
  j["max_iterations"] = c.max_iterations;
  j["trace_cadence"] = c.trace_cadence;
  j["output"] = c.output_path;
  j["parallelism"] = c.parallelism;
}

int resolve_threads(const ExperimentConfig& config) {
  if (const char* env = std::getenv("HTPROX_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  if (config.parallelism > 0) return config.parallelism;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

SolverConfig build_solver_config(const SolverSpec& spec, const CompositeProblem& problem, double F_star, double F0,
                                 const ExperimentConfig& config, std::uint64_t seed) {
  SolverConfig cfg;
  cfg.algorithm = spec.algorithm;
  cfg.max_iterations = config.max_iterations;
  cfg.trace_cadence = config.trace_cadence;
  cfg.seed = seed;
  cfg.gap_target = GapTarget{F_star, config.gap_tolerance};
  cfg.step_multiplier = spec.step.multiplier;
  const long K = spec.step.horizon.value_or(config.max_iterations);
  const double L = problem.smoothness.lipschitz;
  switch (spec.step.kind) {
    case StepRuleKind::Theory: {
      const ScheduleInputs in{problem.smoothness, problem.noise, problem.domain_diameter};
      const double eps = spec.step.epsilon.value_or(config.gap_tolerance * (F0 - F_star));
      cfg.step = make_plan(spec.algorithm, spec.step.mode, in, eps, spec.step.delta, K);
      break;
    }
    case StepRuleKind::TheoremForm: {
      const double cap = L > 0.0 ? spec.step.c / L : std::numeric_limits<double>::infinity();
      const auto k = static_cast<double>(K);
      const double branch = spec.algorithm == Algorithm::SPGMA
                                ? spec.step.scale * std::sqrt(6.0 / ((2.0 * k + 3.0) * (k + 2.0) * k))
                                : spec.step.scale / std::sqrt(2.0 * k);
      cfg.step = ConstantStep{std::min(cap, branch)};
      break;
    }
    case StepRuleKind::Lipschitz:
      if (!(L > 0.0)) throw ConfigError("the lipschitz step rule needs L_f > 0");
      cfg.step = ConstantStep{spec.step.c / L};
      break;
    case StepRuleKind::Constant: cfg.step = ConstantStep{spec.step.eta}; break;
  }
  if (spec.algorithm == Algorithm::SPGMC) {
    cfg.clip_threshold = spec.clip.threshold ? *spec.clip.threshold
                                             : default_clip_threshold(problem, mix64(seed ^ 0xc11bULL),
                                                                      spec.clip.draws, spec.clip.quantile);
  }
  return cfg;
}

ExperimentResult run_experiment(const ExperimentConfig& config, int threads) {
  config.validate();
  if (threads <= 0) threads = resolve_threads(config);
  ExperimentResult result;
  for (const SolverSpec& s : config.solvers) {
    if (s.step.kind == StepRuleKind::Theory && s.step.mode == GuaranteeMode::HighProbability) {
      result.warnings.push_back("solver '" + s.name +
                                "' uses the high-probability step, whose guarantee assumes sub-Weibull noise; "
                                "the polynomial-tail noise of these instances has no finite exponential moment");
    }
  }
  const std::size_t S = config.solvers.size();
  if (S == 0 || config.dimensions.empty() || config.noise.empty()) return result;

  // Instances depend on (n, trial) only; the noise setting changes the oracle.
  const std::size_t D = config.dimensions.size();
  const std::size_t T = static_cast<std::size_t>(config.trials);
  const std::size_t N = config.noise.size();
  std::vector<double> F_star(D * T, 0.0);
  std::vector<std::string> base_error(D * T);

#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::size_t item = 0; item < D * T; ++item) {
    const std::size_t d = item / T;
    const int t = static_cast<int>(item % T);
    InstanceSpec spec = config.instance;
    spec.n = config.dimensions[d];
    spec.seed = config.master_seed ^ static_cast<std::uint64_t>(t);
    spec.rho = 0.0;
    try {
      const GeneratedInstance inst = generate_instance(spec);
      BaselineOptions opts;
      opts.reference_F_star = inst.F_star_reference;
      F_star[item] = run_baseline(inst.problem, opts).F_star;
    } catch (const std::exception& e) {
      base_error[item] = e.what();
    }
  }

  const std::size_t items = D * N * T * S;
  std::vector<TrialRecord> records(items);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::size_t item = 0; item < items; ++item) {
    std::size_t rest = item;
    const std::size_t s = rest % S;
    rest /= S;
    const int t = static_cast<int>(rest % T);
    rest /= T;
    const std::size_t k = rest % N;
    const std::size_t d = rest / N;

    TrialRecord& rec = records[item];
    rec.n = config.dimensions[d];
    rec.rho = config.noise[k].rho;
    rec.omega = config.noise[k].omega;
    rec.trial = t;
    rec.solver = config.solvers[s].name;
    rec.iterations = config.max_iterations;
    if (!base_error[d * T + static_cast<std::size_t>(t)].empty()) {
      rec.error = "baseline: " + base_error[d * T + static_cast<std::size_t>(t)];
      continue;
    }
    const double cpu0 = thread_cpu_seconds();
    try {
      InstanceSpec spec = config.instance;
      spec.n = rec.n;
      spec.rho = rec.rho;
      spec.omega = rec.omega;
      spec.seed = config.master_seed ^ static_cast<std::uint64_t>(t);
      const GeneratedInstance inst = generate_instance(spec);
      const double Fs = F_star[d * T + static_cast<std::size_t>(t)];
      const double F0 = evaluate_F(inst.problem, inst.problem.feasible_start);
      const SolverConfig cfg = build_solver_config(config.solvers[s], inst.problem, Fs, F0, config,
                                                   run_seed(config.master_seed, d, k, t, s));
      rec.step = cfg.base_step();
      const RunResult run = run_solver(inst.problem, cfg);
      rec.iterations = run.iterations_used;
      rec.converged = run.terminated_by == Termination::GapTarget;
      rec.final_gap = (run.gap_history.back().value - Fs) / (F0 - Fs);
    } catch (const std::exception& e) {
      rec.error = e.what();
      rec.converged = false;
    }
    rec.cpu_seconds = thread_cpu_seconds() - cpu0;
  }
  result.records = records;

  for (std::size_t d = 0; d < D; ++d) {
    for (std::size_t k = 0; k < N; ++k) {
      for (std::size_t s = 0; s < S; ++s) {
        AggregateRow row;
        row.n = config.dimensions[d];
        row.rho = config.noise[k].rho;
        row.omega = config.noise[k].omega;
        row.solver = config.solvers[s].name;
        row.trials = config.trials;
        std::vector<double> its;
        double cpu = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
          const TrialRecord& rec = records[((d * N + k) * T + t) * S + s];
          its.push_back(static_cast<double>(rec.iterations));
          cpu += rec.cpu_seconds;
          if (rec.converged) ++row.trials_converged;
        }
        double sum = 0.0;
        for (double v : its) sum += v;
        row.mean_iterations = sum / static_cast<double>(T);
        row.std_iterations = sample_std(its);
        row.mean_cpu_seconds = cpu / static_cast<double>(T);
        result.rows.push_back(row);
      }
    }
  }
  return result;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows, bool include_time) {
  std::ostringstream os;
  os << "# schema=1\n";
  os << "n,rho,omega,solver," << (include_time ? "mean_cpu_seconds," : "")
     << "mean_iterations,std_iterations,trials_converged\n";
  for (const AggregateRow& r : rows) {
    os << r.n << ',' << csv_number(r.rho) << ',' << csv_number(r.omega) << ',' << r.solver << ',';
    if (include_time) os << csv_number(r.mean_cpu_seconds) << ',';
    os << csv_number(r.mean_iterations) << ',' << csv_number(r.std_iterations) << ',' << r.trials_converged << '\n';
  }
  return os.str();
}

std::string trials_csv(const std::vector<TrialRecord>& records, bool include_time) {
  std::ostringstream os;
  os << "# schema=1\n";
  os << "n,rho,omega,trial,solver,iterations,converged,final_gap,step," << (include_time ? "cpu_seconds," : "")
     << "error\n";
  for (const TrialRecord& r : records) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << r.n << ',' << csv_number(r.rho) << ',' << csv_number(r.omega) << ',' << r.trial << ',' << r.solver << ','
       << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << csv_number(r.final_gap) << ','
       << csv_number(r.step) << ',';
    if (include_time) os << csv_number(r.cpu_seconds) << ',';
    os << err << '\n';
  }
  return os.str();
}

void write_experiment_outputs(const ExperimentConfig& config, const ExperimentResult& result) {
  const std::filesystem::path stem(config.output_path);
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  write_text(stem.string() + ".csv", aggregate_csv(result.rows));
  write_text(stem.string() + "_trials.csv", trials_csv(result.records));
  json j;
  j["schema"] = 1;
  j["config"] = config;
  j["warnings"] = result.warnings;
  j["rows"] = json::array();
  for (const AggregateRow& r : result.rows) {
    j["rows"].push_back({{"n", r.n},
                         {"rho", r.rho},
                         {"omega", r.omega},
                         {"solver", r.solver},
                         {"mean_cpu_seconds", r.mean_cpu_seconds},
                         {"mean_iterations", r.mean_iterations},
                         {"std_iterations", r.std_iterations},
                         {"trials_converged", r.trials_converged},
                         {"trials", r.trials}});
  }
  write_text(stem.string() + ".json", j.dump(2) + "\n");
}

LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("a log-log fit needs at least two points");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw NumericalError("log-log fit needs positive data");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const auto n = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

SweepResult sweep_rates(const SweepConfig& config) {
  if (config.seeds < 1) throw ConfigError("sweep needs at least one seed");
  if (config.K_grid.size() < 2) throw ConfigError("sweep needs at least two budgets");
  SweepResult out;
  out.kind = config.kind;
  for (Algorithm alg : config.algorithms) {
    SweepSeries series;
    series.algorithm = alg;
    for (long K : config.K_grid) {
      if (K < 1) throw ConfigError("budgets must be positive");
      double total = 0.0;
      double eps = 0.0;
      for (int s = 0; s < config.seeds; ++s) {
        const std::uint64_t seed = mix64(config.master_seed ^ static_cast<std::uint64_t>(s));
        const GeneratedInstance inst = generate_fixture(config.kind, config.n, seed, config.options);
        const CompositeProblem& prob = inst.problem;
        const ScheduleInputs in{prob.smoothness, prob.noise, prob.domain_diameter};
        eps = epsilon_for_budget(theorem_for(alg, GuaranteeMode::Expectation), in, K);
        SolverConfig cfg;
        cfg.algorithm = alg;
        cfg.step = make_plan(alg, GuaranteeMode::Expectation, in, eps, 0.05, K);
        cfg.max_iterations = K;
        cfg.trace_cadence = K;
        cfg.seed = mix64(seed + 1);
        if (alg == Algorithm::SPGMC) cfg.clip_threshold = default_clip_threshold(prob, cfg.seed);
        const RunResult run = run_solver(prob, cfg);
        total += run.gap_history.back().value - *inst.F_star_reference;
      }
      series.K.push_back(K);
      series.mean_gap.push_back(total / config.seeds);
      series.epsilon.push_back(eps);
    }
    std::vector<double> kx(series.K.begin(), series.K.end());
    series.fit = fit_loglog(kx, series.mean_gap);
    out.series.push_back(series);
  }
  return out;
}

std::string sweep_csv(const SweepResult& result) {
  std::ostringstream os;
  os << "# schema=1\n";
  os << "fixture,solver,K,mean_gap,epsilon\n";
  for (const SweepSeries& s : result.series) {
    for (std::size_t i = 0; i < s.K.size(); ++i) {
      os << to_string(result.kind) << ',' << to_string(s.algorithm) << ',' << s.K[i] << ','
         << csv_number(s.mean_gap[i]) << ',' << csv_number(s.epsilon[i]) << '\n';
    }
  }
  return os.str();
}

void to_json(json& j, const SweepResult& result) {
  j = json::object();
  j["fixture"] = to_string(result.kind);
  j["series"] = json::array();
  for (const SweepSeries& s : result.series) {
    j["series"].push_back({{"solver", to_string(s.algorithm)},
                           {"K", s.K},
                           {"mean_gap", s.mean_gap},
                           {"epsilon", s.epsilon},
                           {"slope", s.fit.slope},
                           {"intercept", s.fit.intercept},
                           {"r_squared", s.fit.r_squared}});
  }
}

}  // namespace htprox
