#include "htprox/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <numeric>

#include <nlohmann/json.hpp>

#include "htprox/errors.hpp"
#include "htprox/kernels.hpp"

namespace htprox {
namespace {

constexpr char kMagic[8] = {'H', 'T', 'P', 'R', 'O', 'X', '0', '1'};

// Shared, immutable data behind the regression oracles.
struct RegressionData {
  Matrix A;
  Matrix At;  // row-major copy of A^T so both products are row-parallel
  Vector b;
  kernels::LinkParams link;

  [[nodiscard]] kernels::MatrixView view() const {
    return {A.data(), static_cast<std::size_t>(A.rows()), static_cast<std::size_t>(A.cols())};
  }
  [[nodiscard]] kernels::MatrixView view_t() const {
    return {At.data(), static_cast<std::size_t>(At.rows()), static_cast<std::size_t>(At.cols())};
  }

  void residual(const Vector& x, Vector& r) const {
    r.resize(A.rows());
    kernels::residual(view(), {x.data(), static_cast<std::size_t>(x.size())},
                      {b.data(), static_cast<std::size_t>(b.size())},
                      {r.data(), static_cast<std::size_t>(r.size())});
  }

  [[nodiscard]] double value(const Vector& x) const {
    Vector r;
    residual(x, r);
    return kernels::link_value({r.data(), static_cast<std::size_t>(r.size())}, link);
  }

  void gradient(const Vector& x, Vector& out) const {
    Vector r;
    residual(x, r);
    Vector w(r.size());
    kernels::link_gradient({r.data(), static_cast<std::size_t>(r.size())}, link,
                           {w.data(), static_cast<std::size_t>(w.size())});
    out.resize(A.cols());
    kernels::gemv(view_t(), {w.data(), static_cast<std::size_t>(w.size())},
                  {out.data(), static_cast<std::size_t>(out.size())});
  }
};

Matrix gaussian_matrix(int rows, int cols, Stream& stream) {
  Matrix A(rows, cols);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = stream.normal();
  return A;
}

Vector gaussian_vector(int n, Stream& stream) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = stream.normal();
  return v;
}

// Fisher-Yates on the stream.
std::vector<int> permutation(int n, Stream& stream) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(stream.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return idx;
}

InstanceMetadata measure(const InstanceSpec& spec, const Matrix& A) {
  InstanceMetadata meta;
  Stream root(spec.seed, 0x11);
  Stream power = root.substream(2);
  Stream noise = root.substream(3);
  meta.spectral_norm = spectral_norm(A, power);
  meta.frobenius_norm = A.norm();
  meta.noise = plug_in_noise_constants({spec.omega, spec.rho}, spec.n, noise);
  return meta;
}

StochasticOracle exact_oracle(SubgradientFn grad) {
  return [grad = std::move(grad)](const Vector& x, Stream&, Vector& out) { grad(x, out); };
}

Vector random_start(int n, double box, Stream& stream) {
  Vector x(n);
  for (int i = 0; i < n; ++i) {
    const double magnitude = box * (0.5 + 0.5 * stream.uniform());
    x[i] = stream.uniform() < 0.5 ? -magnitude : magnitude;
  }
  return x;
}

void write_raw(std::ofstream& out, const double* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
}

void read_raw(std::ifstream& in, double* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw ConfigError("instance file is truncated");
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::BoxL1Regression: return "box_l1";
    case Family::BallResidualRegression: return "ball_residual";
    case Family::SyntheticFixture: return "fixture";
  }
  return "?";
}

std::string to_string(FixtureKind k) {
  switch (k) {
    case FixtureKind::Quadratic: return "quadratic";
    case FixtureKind::Nonsmooth1D: return "nonsmooth";
    case FixtureKind::HolderOnly: return "holder";
    case FixtureKind::Mixed: return "mixed";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  if (s == "box_l1") return Family::BoxL1Regression;
  if (s == "ball_residual") return Family::BallResidualRegression;
  if (s == "fixture") return Family::SyntheticFixture;
  throw ConfigError("unknown problem family '" + s + "'");
}

FixtureKind fixture_from_string(const std::string& s) {
  if (s == "quadratic") return FixtureKind::Quadratic;
  if (s == "nonsmooth") return FixtureKind::Nonsmooth1D;
  if (s == "holder") return FixtureKind::HolderOnly;
  if (s == "mixed") return FixtureKind::Mixed;
  throw ConfigError("unknown fixture kind '" + s + "'");
}

void InstanceSpec::validate() const {
  if (n < 1) throw ConfigError("instance dimension n must be positive");
  if (!(p > 1.0 && p <= 2.0)) throw ConfigError("residual exponent p must lie in (1, 2]");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
  if (!(bound > 0.0)) throw ConfigError("box bound / ball radius must be positive");
  HeavyTailModel{omega, rho}.validate();
}

InstanceSpec InstanceSpec::box_l1(int n, double rho, double omega, std::uint64_t seed) {
  InstanceSpec s;
  s.family = Family::BoxL1Regression;
  s.n = n;
  s.rho = rho;
  s.omega = omega;
  s.lambda = 1.0;
  s.seed = seed;
  return s;
}

InstanceSpec InstanceSpec::ball_residual(int n, double rho, double omega, std::uint64_t seed) {
  InstanceSpec s = box_l1(n, rho, omega, seed);
  s.family = Family::BallResidualRegression;
  s.lambda = 0.1;
  return s;
}

double spectral_norm(const Matrix& A, Stream& stream, int iterations, double tol) {
  if (A.size() == 0) return 0.0;
  Vector v = gaussian_vector(static_cast<int>(A.cols()), stream);
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vector w = A.transpose() * (A * v);
    const double next = std::sqrt(v.dot(w));
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    if (it > 0 && std::abs(next - estimate) <= tol * next) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  // Final Rayleigh quotient at the converged direction.
  return std::max(estimate, (A * v).norm());
}

GeneratedInstance assemble_regression(const InstanceSpec& spec, Matrix A, Vector b, Vector x_star,
                                      const InstanceMetadata& metadata) {
  spec.validate();
  if (A.rows() != spec.n || A.cols() != spec.n || b.size() != spec.n || x_star.size() != spec.n) {
    throw ConfigError("instance data does not match the declared dimension");
  }
  auto data = std::make_shared<RegressionData>();
  data->A = A;
  data->At = A.transpose();
  data->b = b;
  data->link.p = spec.p;

  GeneratedInstance inst;
  inst.spec = spec;
  inst.metadata = metadata;
  inst.noise_model = {spec.omega, spec.rho};
  CompositeProblem& prob = inst.problem;
  prob.dimension = spec.n;
  const double s = metadata.spectral_norm;
  const double n = spec.n;
  prob.smoothness.lipschitz = s * s;
  prob.smoothness.nu = spec.p - 1.0;
  prob.smoothness.holder = std::pow(2.0, 2.0 - spec.p) * std::pow(s, spec.p) * std::pow(n, (2.0 - spec.p) / 2.0);
  prob.noise = {metadata.noise.sigma, metadata.noise.alpha};
  prob.feasible_start = Vector::Zero(spec.n);

  if (spec.family == Family::BoxL1Regression) {
    BoxL1Prox box{Vector::Constant(spec.n, -spec.bound), Vector::Constant(spec.n, spec.bound), spec.lambda};
    box.validate();
    prob.name = "box_l1";
    prob.smoothness.nonsmooth = 0.0;
    prob.domain_diameter = domain_diameter_box(box.lower, box.upper);
    prob.h_value = [box](const Vector& x) { return box.value(x); };
    prob.prox_h = [box](const Vector& v, double eta, Vector& out) { box.apply(v, eta, out); };
    prob.in_domain = [box](const Vector& x) { return box.contains(x); };
  } else if (spec.family == Family::BallResidualRegression) {
    data->link.l1_weight = spec.lambda;
    BallProx ball{spec.bound};
    ball.validate();
    prob.name = "ball_residual";
    // Two l1 subgradients differ by lambda A^T (s - s') with |s - s'| <= 2 sqrt(n).
    prob.smoothness.nonsmooth = 2.0 * spec.lambda * s * std::sqrt(n);
    prob.domain_diameter = domain_diameter_ball(spec.bound);
    prob.h_value = [](const Vector&) { return 0.0; };
    prob.prox_h = [ball](const Vector& v, double eta, Vector& out) { ball.apply(v, eta, out); };
    prob.in_domain = [ball](const Vector& x) { return ball.contains(x); };
    inst.F_star_reference = 0.0;
  } else {
    throw ConfigError("assemble_regression only builds the regression families");
  }
  prob.f_value = [data](const Vector& x) { return data->value(x); };
  prob.exact_subgradient = [data](const Vector& x, Vector& out) { data->gradient(x, out); };
  prob.stochastic_oracle = noisy_oracle(prob.exact_subgradient, inst.noise_model);

  inst.A = std::move(A);
  inst.b = std::move(b);
  inst.x_star = std::move(x_star);
  return inst;
}

GeneratedInstance generate_box_l1(const InstanceSpec& spec) {
  if (spec.family != Family::BoxL1Regression) throw ConfigError("spec family is not box_l1");
  spec.validate();
  Stream stream(spec.seed, 0x11);
  Stream data = stream.substream(1);
  Matrix A = gaussian_matrix(spec.n, spec.n, data);
  Vector x_star = gaussian_vector(spec.n, data);
  const std::vector<int> order = permutation(spec.n, data);
  for (int i = 0; i < spec.n / 2; ++i) x_star[order[static_cast<std::size_t>(i)]] = 0.0;
  x_star = x_star.cwiseMax(-spec.bound).cwiseMin(spec.bound);
  Vector b = A * x_star;
  const InstanceMetadata meta = measure(spec, A);
  return assemble_regression(spec, std::move(A), std::move(b), std::move(x_star), meta);
}

GeneratedInstance generate_ball_residual(const InstanceSpec& spec) {
  if (spec.family != Family::BallResidualRegression) throw ConfigError("spec family is not ball_residual");
  spec.validate();
  Stream stream(spec.seed, 0x11);
  Stream data = stream.substream(1);
  Matrix A = gaussian_matrix(spec.n, spec.n, data);
  Vector x_star = gaussian_vector(spec.n, data);
  while (x_star.norm() > spec.bound) x_star = gaussian_vector(spec.n, data);
  Vector b = A * x_star;
  const InstanceMetadata meta = measure(spec, A);
  return assemble_regression(spec, std::move(A), std::move(b), std::move(x_star), meta);
}

GeneratedInstance generate_instance(const InstanceSpec& spec) {
  switch (spec.family) {
    case Family::BoxL1Regression: return generate_box_l1(spec);
    case Family::BallResidualRegression: return generate_ball_residual(spec);
    case Family::SyntheticFixture: {
      FixtureOptions options;
      if (spec.rho > 0.0) {
        options.noise = HeavyTailModel{spec.omega, spec.rho};
        options.noise_alpha = std::min(2.0, 0.95 * spec.omega);
      }
      return generate_fixture(spec.fixture, spec.n, spec.seed, options);
    }
  }
  throw ConfigError("unknown family");
}

GeneratedInstance generate_fixture(FixtureKind kind, int n, std::uint64_t seed, const FixtureOptions& options) {
  if (n < 1) throw ConfigError("fixture dimension must be positive");
  if (!(options.box > 0.0)) throw ConfigError("fixture box must be positive");
  const double nu = options.nu;
  if (!(nu > 0.0 && nu < 1.0)) throw ConfigError("fixture nu must lie in (0, 1)");

  GeneratedInstance inst;
  inst.spec.family = Family::SyntheticFixture;
  inst.spec.fixture = kind;
  inst.spec.n = n;
  inst.spec.seed = seed;
  inst.spec.bound = options.box;
  inst.spec.rho = options.noise ? options.noise->rho : 0.0;
  inst.spec.omega = options.noise ? options.noise->omega : 2.0;
  inst.spec.lambda = 0.0;
  inst.noise_model = options.noise.value_or(HeavyTailModel{2.0, 0.0});
  inst.x_star = Vector::Zero(n);
  inst.F_star_reference = 0.0;

  CompositeProblem& prob = inst.problem;
  prob.dimension = n;
  prob.name = "fixture_" + to_string(kind);
  prob.smoothness.nu = nu;

  const double root_n = std::sqrt(static_cast<double>(n));
  switch (kind) {
    case FixtureKind::Quadratic: {
      auto mu = std::make_shared<Vector>(n);
      for (int i = 0; i < n; ++i) {
        const double frac = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        (*mu)[i] = std::pow(options.spectrum_floor, frac);
      }
      prob.smoothness.lipschitz = 1.0;
      prob.f_value = [mu](const Vector& x) { return 0.5 * mu->dot(x.cwiseAbs2()); };
      prob.exact_subgradient = [mu](const Vector& x, Vector& out) { out = mu->cwiseProduct(x); };
      break;
    }
    case FixtureKind::Nonsmooth1D: {
      prob.smoothness.nonsmooth = 2.0 * root_n;
      prob.f_value = [](const Vector& x) { return x.lpNorm<1>(); };
      prob.exact_subgradient = [](const Vector& x, Vector& out) {
        out = x.unaryExpr([](double t) { return static_cast<double>((t > 0.0) - (t < 0.0)); });
      };
      break;
    }
    case FixtureKind::HolderOnly: {
      prob.smoothness.holder = std::pow(2.0, 1.0 - nu);
      prob.f_value = [nu](const Vector& x) { return std::pow(x.norm(), 1.0 + nu) / (1.0 + nu); };
      prob.exact_subgradient = [nu](const Vector& x, Vector& out) {
        const double r = x.norm();
        out = r > 0.0 ? Vector(std::pow(r, nu - 1.0) * x) : Vector(Vector::Zero(x.size()));
      };
      break;
    }
    case FixtureKind::Mixed: {
      const double L = options.lipschitz;
      const double H = options.holder;
      const double M = options.nonsmooth;
      if (!(L >= 0.0 && H >= 0.0 && M >= 0.0)) throw ConfigError("fixture constants must be nonnegative");
      const double holder_weight = H / std::pow(2.0, 1.0 - nu);
      prob.smoothness.lipschitz = L;
      prob.smoothness.holder = H;
      prob.smoothness.nonsmooth = M;
      prob.f_value = [=](const Vector& x) {
        const double r = x.norm();
        return 0.5 * L * r * r + holder_weight * std::pow(r, 1.0 + nu) / (1.0 + nu) + 0.5 * M * r;
      };
      prob.exact_subgradient = [=](const Vector& x, Vector& out) {
        const double r = x.norm();
        if (r == 0.0) {
          out = Vector::Zero(x.size());
          return;
        }
        out = (L + holder_weight * std::pow(r, nu - 1.0) + 0.5 * M / r) * x;
      };
      break;
    }
  }

  BoxL1Prox box{Vector::Constant(n, -options.box), Vector::Constant(n, options.box), 0.0};
  prob.domain_diameter = domain_diameter_box(box.lower, box.upper);
  prob.h_value = [](const Vector&) { return 0.0; };
  prob.prox_h = [box](const Vector& v, double eta, Vector& out) { box.apply(v, eta, out); };
  prob.in_domain = [box](const Vector& x) { return box.contains(x); };

  if (options.noise) {
    const HeavyTailModel& model = *options.noise;
    if (!(options.noise_alpha < model.omega)) {
      throw ConfigError("fixture noise needs noise_alpha < omega for a finite moment bound");
    }
    prob.noise = {heavy_tail_sigma_bound(model, n, options.noise_alpha), options.noise_alpha};
    prob.stochastic_oracle = noisy_oracle(prob.exact_subgradient, model);
  } else {
    prob.noise = {0.0, options.noise_alpha};
    prob.stochastic_oracle = exact_oracle(prob.exact_subgradient);
  }
  inst.metadata.noise = {prob.noise.alpha, prob.noise.sigma, options.noise ? "moment_bound" : "noiseless", 0};

  Stream start(seed, 0x51);
  prob.feasible_start = random_start(n, options.box, start);
  return inst;
}

void save_instance(const GeneratedInstance& instance, const std::filesystem::path& stem) {
  if (instance.spec.family == Family::SyntheticFixture) {
    throw ConfigError("fixtures are regenerated from their seed and are not serialized");
  }
  std::filesystem::path bin = stem;
  bin += ".bin";
  std::filesystem::path meta = stem;
  meta += ".json";
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + bin.string());
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(instance.A.rows()),
                                 static_cast<std::uint64_t>(instance.A.cols())};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  write_raw(out, instance.A.data(), static_cast<std::size_t>(instance.A.size()));
  write_raw(out, instance.b.data(), static_cast<std::size_t>(instance.b.size()));
  write_raw(out, instance.x_star.data(), static_cast<std::size_t>(instance.x_star.size()));
  if (!out) throw std::runtime_error("failed writing " + bin.string());

  std::ofstream side(meta);
  if (!side) throw std::runtime_error("cannot write " + meta.string());
  side << instance_summary(instance).dump(2) << '\n';
}

GeneratedInstance load_instance(const std::filesystem::path& stem) {
  std::filesystem::path bin = stem;
  bin += ".bin";
  std::filesystem::path meta = stem;
  meta += ".json";
  std::ifstream side(meta);
  if (!side) throw ConfigError("cannot read " + meta.string());
  const nlohmann::json j = nlohmann::json::parse(side);
  const InstanceSpec spec = j.at("spec").get<InstanceSpec>();
  InstanceMetadata metadata;
  metadata.spectral_norm = j.at("spectral_norm").get<double>();
  metadata.frobenius_norm = j.at("frobenius_norm").get<double>();
  metadata.noise.alpha = j.at("noise").at("alpha").get<double>();
  metadata.noise.sigma = j.at("noise").at("sigma").get<double>();
  metadata.noise.method = j.at("noise").at("method").get<std::string>();
  metadata.noise.draws = j.at("noise").at("draws").get<long>();

  std::ifstream in(bin, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + bin.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ConfigError(bin.string() + " is not an instance file (bad magic)");
  }
  std::uint64_t dims[2];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in) throw ConfigError("instance file is truncated");
  Matrix A(static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(dims[1]));
  Vector b(static_cast<Eigen::Index>(dims[0]));
  Vector x_star(static_cast<Eigen::Index>(dims[1]));
  read_raw(in, A.data(), static_cast<std::size_t>(A.size()));
  read_raw(in, b.data(), static_cast<std::size_t>(b.size()));
  read_raw(in, x_star.data(), static_cast<std::size_t>(x_star.size()));
  return assemble_regression(spec, std::move(A), std::move(b), std::move(x_star), metadata);
}

void to_json(nlohmann::json& j, const InstanceSpec& spec) {
  j = nlohmann::json{{"family", to_string(spec.family)}, {"n", spec.n},         {"rho", spec.rho},
                     {"omega", spec.omega},              {"p", spec.p},         {"lambda", spec.lambda},
                     {"bound", spec.bound},              {"seed", spec.seed}};
  if (spec.family == Family::SyntheticFixture) j["fixture"] = to_string(spec.fixture);
}

void from_json(const nlohmann::json& j, InstanceSpec& spec) {
  spec.family = family_from_string(j.at("family").get<std::string>());
  const InstanceSpec defaults = spec.family == Family::BallResidualRegression
                                    ? InstanceSpec::ball_residual(100, 1.0, 1.8, 0)
                                    : InstanceSpec::box_l1(100, 1.0, 1.8, 0);
  spec.n = j.value("n", defaults.n);
  spec.rho = j.value("rho", defaults.rho);
  spec.omega = j.value("omega", defaults.omega);
  spec.p = j.value("p", defaults.p);
  spec.lambda = j.value("lambda", defaults.lambda);
  spec.bound = j.value("bound", defaults.bound);
  spec.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("fixture")) spec.fixture = fixture_from_string(j.at("fixture").get<std::string>());
}

nlohmann::json instance_summary(const GeneratedInstance& instance) {
  const auto& prob = instance.problem;
  nlohmann::json j;
  j["format"] = "HTPROX01";
  j["spec"] = instance.spec;
  j["spectral_norm"] = instance.metadata.spectral_norm;
  j["frobenius_norm"] = instance.metadata.frobenius_norm;
  j["noise"] = {{"alpha", instance.metadata.noise.alpha},
                {"sigma", instance.metadata.noise.sigma},
                {"method", instance.metadata.noise.method},
                {"draws", instance.metadata.noise.draws}};
  j["constants"] = {{"L_f", prob.smoothness.lipschitz}, {"H_f", prob.smoothness.holder},
                    {"nu", prob.smoothness.nu},         {"M_f", prob.smoothness.nonsmooth},
                    {"D_h", prob.domain_diameter}};
  if (instance.F_star_reference) {
    j["F_star_reference"] = *instance.F_star_reference;
  } else {
    j["F_star_reference"] = nullptr;
  }
  return j;
}

}  // namespace htprox
