#pragma once

#include <stdexcept>
#include <string>

namespace htprox {

/// Non-finite values produced by an objective term, an oracle or an iterate.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid constants, solver settings or experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace htprox
