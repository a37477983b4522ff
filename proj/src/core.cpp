#include "htprox/core.hpp"

#include <cmath>
#include <sstream>

#include "htprox/errors.hpp"

namespace htprox {

void SmoothnessConstants::validate() const {
  if (!(lipschitz >= 0.0) || !(holder >= 0.0) || !(nonsmooth >= 0.0)) {
    throw ConfigError("smoothness constants L_f, H_f, M_f must be nonnegative");
  }
  if (!(nu > 0.0 && nu < 1.0)) {
    throw ConfigError("Hölder exponent nu must lie in (0, 1)");
  }
}

void NoiseConstants::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("noise scale sigma must be finite and nonnegative");
  }
  if (!(alpha > 1.0 && alpha <= 2.0)) {
    throw ConfigError("noise moment order alpha must lie in (1, 2]");
  }
}

void CompositeProblem::validate() const {
  if (dimension <= 0) throw ConfigError("problem dimension must be positive");
  if (!stochastic_oracle || !f_value || !h_value || !prox_h || !in_domain) {
    throw ConfigError("problem '" + name + "' is missing a required callable");
  }
  smoothness.validate();
  noise.validate();
  if (!(domain_diameter > 0.0) || !std::isfinite(domain_diameter)) {
    throw ConfigError("domain diameter D_h must be positive and finite");
  }
  if (feasible_start.size() != dimension) {
    throw ConfigError("feasible start has the wrong dimension");
  }
  if (!in_domain(feasible_start)) {
    throw ConfigError("feasible start is outside dom h");
  }
}

double evaluate_F(const CompositeProblem& problem, const Vector& x) {
  const double f = problem.f_value(x);
  const double h = problem.h_value(x);
  if (!std::isfinite(f)) {
    std::ostringstream msg;
    msg << "numerical overflow in f(x) = " << f;
    throw NumericalError(msg.str());
  }
  if (!std::isfinite(h)) {
    std::ostringstream msg;
    msg << "numerical overflow in h(x) = " << h;
    throw NumericalError(msg.str());
  }
  const double total = f + h;
  if (!std::isfinite(total)) throw NumericalError("numerical overflow in f(x) + h(x)");
  return total;
}

std::string to_string(Termination t) {
  return t == Termination::GapTarget ? "gap_target" : "budget_exhausted";
}

}  // namespace htprox
