#pragma once

#include <functional>
#include <vector>

#include "psriccati/ocp.hpp"

namespace psr {

/// g(x) = ( fq(x), 0 ): the coordinate part of one more step of the dynamics.
/// Only the coordinate increment enters, so g is independent of the control.
class LookaheadMap {
 public:
  explicit LookaheadMap(StructuredDynamics dyn);

  Vector value(const Vector& x) const;
  /// [dfq/dx ; 0], nx x nx.
  Matrix jacobian(const Vector& x) const;

 private:
  StructuredDynamics dyn_;
};

LookaheadMap make_lookahead(const StructuredDynamics& dyn);

/// Equality constraint phi(x) = 0 at stage k whose output reacts to the
/// control after one step (e.g. a velocity-level constraint).
class StateConstraint {
 public:
  using Residual = std::function<Vector(const Vector& x)>;
  using Jacobian = std::function<Matrix(const Vector& x)>;

  StateConstraint(int stage, int nc, Residual phi, Jacobian phi_x);

  int stage() const { return stage_; }
  int nc() const { return nc_; }
  Vector residual(const Vector& x) const { return phi_(x); }
  Matrix jacobian(const Vector& x) const { return phi_x_(x); }

 private:
  int stage_;
  int nc_;
  Residual phi_;
  Jacobian phi_x_;
};

/// Mixed state-control constraint c(x_a, u_a) = 0 at an anchor stage a that
/// reproduces a pure-state constraint phi(x_k) = 0 whenever the dynamics hold
/// between a and k.
class MixedConstraint {
 public:
  int anchor_stage() const { return anchor_stage_; }
  int original_stage() const { return original_stage_; }
  int relative_degree() const { return original_stage_ - anchor_stage_; }
  int nc() const { return nc_; }

  /// Point at which phi is evaluated: x + f(x, u) + g(x + f(x, u)) for
  /// relative degree 2, x + f(x, u) for relative degree 1.
  Vector predicted_state(const Vector& x, const Vector& u) const;
  Vector residual(const Vector& x, const Vector& u) const;
  /// C = phi_x (I + g_x) A, D = phi_x (I + g_x) B with A = I + f_x, B = f_u
  /// (the g_x factor is dropped for relative degree 1).
  void jacobians(const Vector& x, const Vector& u, Matrix& C, Matrix& D) const;

 private:
  friend MixedConstraint transform_constraint(const StructuredDynamics&,
                                              const PureStateConstraint&);
  friend MixedConstraint transform_constraint_rd1(const StructuredDynamics&,
                                                  const StateConstraint&);
  MixedConstraint(StructuredDynamics dyn, int anchor, int original, int nc,
                  StateConstraint::Residual phi,
                  StateConstraint::Jacobian phi_x);

  StructuredDynamics dyn_;
  int anchor_stage_;
  int original_stage_;
  int nc_;
  StateConstraint::Residual phi_;
  StateConstraint::Jacobian phi_x_;
};

/// Rewrites phi(q_k) = 0 as a constraint on (x_{k-2}, u_{k-2}).
MixedConstraint transform_constraint(const StructuredDynamics& dyn,
                                     const PureStateConstraint& c);

/// Rewrites phi(x_k) = 0 (relative degree 1) as a constraint on
/// (x_{k-1}, u_{k-1}).
MixedConstraint transform_constraint_rd1(const StructuredDynamics& dyn,
                                         const StateConstraint& c);

/// An OcpProblem together with its transformed constraints and the
/// stage -> constraint lookup used by linearization and the recursions.
class TransformedOcp {
 public:
  explicit TransformedOcp(OcpProblem problem);

  const OcpProblem& problem() const { return problem_; }
  const std::vector<MixedConstraint>& constraints() const {
    return constraints_;
  }
  /// Index of the constraint anchored at stage i, or -1.
  int constraint_at_anchor(int i) const { return anchor_index_[i]; }
  int horizon() const { return problem_.horizon(); }

 private:
  OcpProblem problem_;
  std::vector<MixedConstraint> constraints_;
  std::vector<int> anchor_index_;
};

/// Maps multipliers of the transformed problem to multipliers of the original
/// one: for each constraint at stage k,
///   nu*          = nu
///   lambda*_k    = lambda_k + phi_x' nu
///   lambda*_{k-1} = lambda_{k-1} + (I + g_x') phi_x' nu
/// and lambda*_i = lambda_i elsewhere. phi_x is taken at x_k and g_x at
/// x_{k-1}. Primal trajectories are copied unchanged.
Iterate reconstruct_multipliers(const Iterate& sol, const OcpProblem& problem);

/// Stacked first-order conditions of the original problem (pure-state
/// constraints imposed at their own stage) at `sol`, whose multipliers must
/// belong to the original problem.
Vector original_fonc_residuals(const Iterate& sol, const OcpProblem& problem);

/// l2 norm of original_fonc_residuals.
double original_fonc_residual(const Iterate& sol, const OcpProblem& problem);

}  // namespace psr
