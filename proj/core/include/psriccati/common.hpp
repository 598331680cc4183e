#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace psr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dimension or argument mismatch on a public entry point.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A constraint the transformation cannot handle (stage too early, bad shape).
class UnsupportedConstraintError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Reduced Hessian of a stage is not positive definite.
class CurvatureError : public std::runtime_error {
 public:
  CurvatureError(int stage, const std::string& what)
      : std::runtime_error(what), stage_(stage) {}
  int stage() const { return stage_; }

 private:
  int stage_;
};

/// Constraint Jacobian block D at an anchor stage lost row rank.
class DegenerateConstraintError : public std::runtime_error {
 public:
  DegenerateConstraintError(int constraint, int stage, const std::string& what)
      : std::runtime_error(what), constraint_(constraint), stage_(stage) {}
  int constraint() const { return constraint_; }
  int stage() const { return stage_; }

 private:
  int constraint_;
  int stage_;
};

/// A direct factorization hit a singular (or numerically singular) matrix.
class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_size(const Vector& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw DimensionError(std::string(what) + ": expected length " +
                         std::to_string(n) + ", got " +
                         std::to_string(v.size()));
  }
}

}  // namespace psr
