#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "htprox/core.hpp"
#include "htprox/noise.hpp"
#include "htprox/prox.hpp"

namespace htprox {

enum class Family { BoxL1Regression, BallResidualRegression, SyntheticFixture };
enum class FixtureKind { Quadratic, Nonsmooth1D, HolderOnly, Mixed };

std::string to_string(Family f);
std::string to_string(FixtureKind k);
Family family_from_string(const std::string& s);
FixtureKind fixture_from_string(const std::string& s);

/// Recipe for one random experiment instance.
struct InstanceSpec {
  Family family = Family::BoxL1Regression;
  int n = 100;
  double rho = 1.0;    // noise scale
  double omega = 1.8;  // tail index
  double p = 1.5;      // residual exponent
  double lambda = 1.0;
  double bound = 100.0;  // box half-width or ball radius
  std::uint64_t seed = 0;
  FixtureKind fixture = FixtureKind::Quadratic;

  void validate() const;
  static InstanceSpec box_l1(int n, double rho, double omega, std::uint64_t seed);
  static InstanceSpec ball_residual(int n, double rho, double omega, std::uint64_t seed);
};

struct InstanceMetadata {
  double spectral_norm = 0.0;
  double frobenius_norm = 0.0;
  NoisePlugIn noise;
};

/// A generated instance. The problem's callables share ownership of the data,
/// so copies of the instance (or of the problem alone) stay valid.
struct GeneratedInstance {
  InstanceSpec spec;
  Matrix A;
  Vector b;
  Vector x_star;
  CompositeProblem problem;
  std::optional<double> F_star_reference;
  InstanceMetadata metadata;
  HeavyTailModel noise_model;
};

/// |A|_2 by power iteration on A^T A (at most `iterations` steps, relative
/// tolerance `tol` on successive estimates).
double spectral_norm(const Matrix& A, Stream& stream, int iterations = 200, double tol = 1e-10);

/// min_{l<=x<=u} |Ax-b|^2/2 + |Ax-b|_p^p/p + lambda |x|_1 with l = -bound, u = bound,
/// half of the planted x* zeroed and b = A x*.
GeneratedInstance generate_box_l1(const InstanceSpec& spec);

/// min_{|x|<=bound} |Ax-b|^2/2 + |Ax-b|_p^p/p + lambda |Ax-b|_1 with dense x*
/// and b = A x*, so F* = 0.
GeneratedInstance generate_ball_residual(const InstanceSpec& spec);

/// Dispatch on spec.family (fixtures are built with default options).
GeneratedInstance generate_instance(const InstanceSpec& spec);

/// Controlled problems with F* = 0 at the origin, over the box [-box, box]^n.
struct FixtureOptions {
  double box = 1.0;
  double spectrum_floor = 1e-8;  // smallest curvature of the quadratic fixture
  double nu = 0.5;
  // Mixed fixture weights, given directly as the declared constants.
  double lipschitz = 1.0;
  double holder = 1.0;
  double nonsmooth = 1.0;
  // Oracle noise; sigma is declared by the rigorous moment bound at noise_alpha.
  std::optional<HeavyTailModel> noise;
  double noise_alpha = 2.0;
};

/// Quadratic:   f = sum_i mu_i x_i^2 / 2, mu log-spaced from 1 down to spectrum_floor.
/// Nonsmooth1D: f = |x|_1 (separable absolute value; M_f = 2 sqrt(n)).
/// HolderOnly:  f = |x|^(1+nu) / (1+nu) (H_f = 2^(1-nu)).
/// Mixed:       f = L|x|^2/2 + H|x|^(1+nu) / (2^(1-nu)(1+nu)) + M|x|/2.
/// The seed draws the start point: |x0_i| uniform in [box/2, box] with random signs.
GeneratedInstance generate_fixture(FixtureKind kind, int n, std::uint64_t seed,
                                   const FixtureOptions& options = {});

/// Rebuild the problem around given data (used by generation and loading).
GeneratedInstance assemble_regression(const InstanceSpec& spec, Matrix A, Vector b, Vector x_star,
                                      const InstanceMetadata& metadata);

/// Binary layout (little endian): 8-byte magic "HTPROX01", u64 rows, u64 cols,
/// A row-major f64, b f64[rows], x* f64[cols]. Metadata goes to `<stem>.json`.
void save_instance(const GeneratedInstance& instance, const std::filesystem::path& stem);
GeneratedInstance load_instance(const std::filesystem::path& stem);

void to_json(nlohmann::json& j, const InstanceSpec& spec);
void from_json(const nlohmann::json& j, InstanceSpec& spec);
nlohmann::json instance_summary(const GeneratedInstance& instance);

}  // namespace htprox
