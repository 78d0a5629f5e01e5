#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nodal {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Raised when the discrete V-form fails to be positive definite.
class DefinitenessError : public Error {
 public:
  DefinitenessError(const std::string& what, double smallest_ritz)
      : Error(what), smallest_ritz_(smallest_ritz) {}
  double smallest_ritz() const { return smallest_ritz_; }

 private:
  double smallest_ritz_;
};

/// Non-integrable potential; carries the partial sums seen before giving up.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::vector<double> partial_sums)
      : Error(what), partial_sums_(std::move(partial_sums)) {}
  const std::vector<double>& partial_sums() const { return partial_sums_; }

 private:
  std::vector<double> partial_sums_;
};

/// Linear or nonlinear solver failure.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<double> residuals = {})
      : Error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

class BracketError : public SolverError {
 public:
  using SolverError::SolverError;
};

class StagnationError : public SolverError {
 public:
  using SolverError::SolverError;
};

/// Sign structure of a field does not match what the operation needs.
class SignError : public Error {
 public:
  using Error::Error;
};

}  // namespace nodal
