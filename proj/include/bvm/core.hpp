#pragma once

// Shared vocabulary: linear-algebra aliases and the error hierarchy.

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace bvm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point of the parameter space.
using ParamPoint = Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter fell outside the model's admissible box.
class DomainError : public Error {
 public:
  DomainError(std::size_t coordinate, double value, double lo, double hi);
  std::size_t coordinate() const noexcept { return coordinate_; }

 private:
  std::size_t coordinate_;
};

/// The requested operation is not available for this model or true process.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// A matrix expected to be symmetric positive definite was not.
class NotPositiveDefiniteError : public Error {
 public:
  NotPositiveDefiniteError(const std::string& what, Vector eigenvalues);
  const Vector& eigenvalues() const noexcept { return eigenvalues_; }

 private:
  Vector eigenvalues_;
};

/// An iterative solver stopped without meeting its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Vector last_iterate)
      : Error(what), last_(std::move(last_iterate)) {}
  const Vector& last_iterate() const noexcept { return last_; }

 private:
  Vector last_;
};

/// Invalid arguments (precondition violations).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A Monte Carlo estimate together with its standard error.
struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

}  // namespace bvm
