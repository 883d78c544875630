#pragma once

#include <stdexcept>
#include <string>

namespace heis {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the arguments was violated.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Evaluation requested where a field is not smooth (the group origin,
/// the t-axis for reduced quantities).
class SingularPoint : public Error {
 public:
  using Error::Error;
};

/// A field declared toric/cylindrical gave different jets on two
/// representatives of the same orbit.
class SymmetryViolation : public Error {
 public:
  using Error::Error;
};

/// Quadrature did not reach its target tolerance; carries the best estimate.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double best_estimate)
      : Error(what), best_estimate_(best_estimate) {}
  double best_estimate() const noexcept { return best_estimate_; }

 private:
  double best_estimate_;
};

/// Linear solve failed to reach the residual target.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual) : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace heis
