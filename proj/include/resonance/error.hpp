#pragma once

#include <stdexcept>
#include <string>

namespace resonance {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class SymmetryError : public Error {
 public:
  using Error::Error;
};

/// Eigensolver did not converge; carries the residual it reached.
class EigenSolverError : public Error {
 public:
  EigenSolverError(const std::string& what, double achieved_residual)
      : Error(what), achieved_residual_(achieved_residual) {}
  double achieved_residual() const noexcept { return achieved_residual_; }

 private:
  double achieved_residual_;
};

/// A contract on the nonlinear map (N(0)=0, monotonicity, profile bounds) failed.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration; `path` is the JSON pointer of the offending value.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace resonance
