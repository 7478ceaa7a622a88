#pragma once

#include <stdexcept>
#include <string>

namespace tubeband {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated a documented contract: bad argument, bad config,
/// unsupported request. The CLI maps these to exit code 2.
class ContractError : public Error {
 public:
  using Error::Error;
};

class DomainError : public ContractError {
 public:
  using ContractError::ContractError;
};

class UnsupportedError : public ContractError {
 public:
  using ContractError::ContractError;
};

class ConfigError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// The inputs were well formed but the numerics failed. Exit code 1.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SingularDesignError : public NumericalError {
 public:
  SingularDesignError(int rank, int required)
      : NumericalError("singular design: rank " + std::to_string(rank) +
                       " < " + std::to_string(required)),
        rank_(rank),
        required_(required) {}

  int rank() const noexcept { return rank_; }
  int required() const noexcept { return required_; }

 private:
  int rank_;
  int required_;
};

class FactorizationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SolverError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateCurveError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class StationaryPointError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The normalized curve is not one-to-one or contains an antipodal pair.
class AssumptionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace tubeband
