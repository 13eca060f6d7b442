#pragma once

#include <stdexcept>
#include <string>

namespace dcre {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (shape mismatch, bad index, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Invalid or infeasible configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values appeared during optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A pipeline phase is missing an artifact produced by another phase.
class DependencyError : public Error {
 public:
  DependencyError(const std::string& what, std::string producer)
      : Error(what), producer_(std::move(producer)) {}
  const std::string& producer() const { return producer_; }

 private:
  std::string producer_;
};

}  // namespace dcre
