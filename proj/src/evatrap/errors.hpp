#pragma once

#include <stdexcept>
#include <string>

namespace evatrap {

// Every error raised by the library derives from Error so the C API can map
// it onto a status code in one place.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ResonanceError : public DomainError {
 public:
  using DomainError::DomainError;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class CompositionError : public Error {
 public:
  using Error::Error;
};

class NoTrapMinimum : public Error {
 public:
  using Error::Error;
};

}  // namespace evatrap
