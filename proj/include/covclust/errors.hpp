#pragma once

#include <stdexcept>
#include <string>

namespace covclust {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or hyperparameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Factorization failure or non-finite intermediate.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An MCMC chain stopped before finishing its schedule.
class ChainAbort : public Error {
 public:
  ChainAbort(long iteration, const std::string& cause)
      : Error("chain aborted at iteration " + std::to_string(iteration) + ": " + cause),
        iteration_(iteration),
        cause_(cause) {}

  long iteration() const { return iteration_; }
  const std::string& cause() const { return cause_; }

 private:
  long iteration_;
  std::string cause_;
};

}  // namespace covclust
