#pragma once

#include <stdexcept>
#include <string>

namespace tikreg {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand sizes disagree with each other or with a space.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain of the operation (r <= 1, alpha <= 0, NaN input, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A vector offered as a subgradient fails the Fenchel-Young equality.
class SubgradientError : public Error {
 public:
  using Error::Error;
};

/// The pair (x_dag, omega_dag) does not satisfy A^* omega_dag in dR(x_dag).
class SourceConditionError : public Error {
 public:
  using Error::Error;
};

/// An iterative solve stopped before its KKT residuals reached tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Malformed experiment configuration or input file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace tikreg
