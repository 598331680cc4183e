#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "psriccati/common.hpp"

namespace psr {

/// State partitioned as x = (q, v) with q and v of equal length n.
class StateVector {
 public:
  StateVector() = default;
  StateVector(Vector q, Vector v);

  /// Splits a stacked vector of even length 2n into (q, v).
  static StateVector from_stacked(const Vector& x);

  const Vector& q() const { return q_; }
  const Vector& v() const { return v_; }
  int n() const { return static_cast<int>(q_.size()); }
  int nx() const { return 2 * n(); }
  Vector stacked() const;

 private:
  Vector q_;
  Vector v_;
};

/// Discrete-time dynamics x' = x + f(x, u) where
///   f(x, u) = ( fq(x), fv(x, u) ).
/// The coordinate increment fq has no control argument, so the coordinates at
/// the next stage never depend on the current control.
class StructuredDynamics {
 public:
  using CoordinateMap = std::function<Vector(const Vector& x)>;
  /// Returns dfq/dx, shape n x 2n.
  using CoordinateJacobian = std::function<Matrix(const Vector& x)>;
  using VelocityMap = std::function<Vector(const Vector& x, const Vector& u)>;
  /// Fills dfv/dx (n x 2n) and dfv/du (n x nu).
  using VelocityJacobian = std::function<void(const Vector& x, const Vector& u,
                                              Matrix& dfv_dx, Matrix& dfv_du)>;

  StructuredDynamics(int n, int nu, CoordinateMap fq, CoordinateJacobian fq_x,
                     VelocityMap fv, VelocityJacobian fv_xu);

  int n() const { return n_; }
  int nx() const { return 2 * n_; }
  int nu() const { return nu_; }

  Vector coordinate_increment(const Vector& x) const;
  Matrix coordinate_jacobian(const Vector& x) const;
  Vector velocity_increment(const Vector& x, const Vector& u) const;
  void velocity_jacobians(const Vector& x, const Vector& u, Matrix& dfv_dx,
                          Matrix& dfv_du) const;

  /// Full increment f(x, u).
  Vector increment(const Vector& x, const Vector& u) const;
  /// fx (nx x nx) and fu (nx x nu); the upper n rows of fu are zero.
  void increment_jacobians(const Vector& x, const Vector& u, Matrix& fx,
                           Matrix& fu) const;
  /// x + f(x, u).
  Vector next(const Vector& x, const Vector& u) const;

 private:
  void check(const Vector& x, const Vector& u) const;

  int n_;
  int nu_;
  CoordinateMap fq_;
  CoordinateJacobian fq_x_;
  VelocityMap fv_;
  VelocityJacobian fv_xu_;
};

StateVector step_dynamics(const StructuredDynamics& dyn, const StateVector& x,
                          const Vector& u);

/// Position-level equality constraint phi(q_k) = 0 imposed at stage k >= 2.
class PureStateConstraint {
 public:
  using Residual = std::function<Vector(const Vector& q)>;
  /// Returns dphi/dq, shape nc x n.
  using Jacobian = std::function<Matrix(const Vector& q)>;

  PureStateConstraint(int stage, int nc, Residual phi, Jacobian phi_q);

  /// phi(q) = q[indices] - targets.
  static PureStateConstraint waypoint(int stage, int n,
                                      const std::vector<int>& indices,
                                      const Vector& targets);

  int stage() const { return stage_; }
  int nc() const { return nc_; }
  Vector residual(const Vector& q) const;
  Matrix jacobian(const Vector& q) const;
  /// Full-state Jacobian [phi_q, 0] for a state of dimension 2n.
  Matrix state_jacobian(const Vector& x) const;

 private:
  int stage_;
  int nc_;
  Residual phi_;
  Jacobian phi_q_;
};

/// Stage cost L_i(x, u) and terminal cost. Stage-indexed so that penalty
/// terms can be attached to individual stages.
class CostModel {
 public:
  virtual ~CostModel() = default;

  virtual double stage(int i, const Vector& x, const Vector& u) const = 0;
  virtual void stage_gradient(int i, const Vector& x, const Vector& u,
                              Vector& lx, Vector& lu) const = 0;
  virtual void stage_hessian(int i, const Vector& x, const Vector& u,
                             Matrix& lxx, Matrix& lxu, Matrix& luu) const = 0;

  virtual double terminal(const Vector& x) const = 0;
  virtual Vector terminal_gradient(const Vector& x) const = 0;
  virtual Matrix terminal_hessian(const Vector& x) const = 0;
};

/// L(x, u) = 1/2 (x - xr)' Q (x - xr) + (x - xr)' S (u - ur)
///         + 1/2 (u - ur)' R (u - ur),
/// terminal 1/2 (x - xr)' Qf (x - xr). Same weights at every stage.
class QuadraticCost final : public CostModel {
 public:
  QuadraticCost(Matrix Q, Matrix S, Matrix R, Matrix Qf, Vector x_ref,
                Vector u_ref);
  static QuadraticCost diagonal(const Vector& q_diag, const Vector& r_diag,
                                const Vector& qf_diag);

  double stage(int i, const Vector& x, const Vector& u) const override;
  void stage_gradient(int i, const Vector& x, const Vector& u, Vector& lx,
                      Vector& lu) const override;
  void stage_hessian(int i, const Vector& x, const Vector& u, Matrix& lxx,
                     Matrix& lxu, Matrix& luu) const override;
  double terminal(const Vector& x) const override;
  Vector terminal_gradient(const Vector& x) const override;
  Matrix terminal_hessian(const Vector& x) const override;

 private:
  Matrix Q_, S_, R_, Qf_;
  Vector x_ref_, u_ref_;
};

/// Throws DimensionError when |M - M'| exceeds tol anywhere.
void require_symmetric(const Matrix& M, double tol, const char* what);

/// Discrete-time OCP with pure-state equality constraints.
class OcpProblem {
 public:
  OcpProblem(StructuredDynamics dynamics, std::shared_ptr<const CostModel> cost,
             std::vector<PureStateConstraint> constraints, int horizon,
             StateVector x_init);

  const StructuredDynamics& dynamics() const { return dynamics_; }
  const CostModel& cost() const { return *cost_; }
  std::shared_ptr<const CostModel> cost_ptr() const { return cost_; }
  const std::vector<PureStateConstraint>& constraints() const {
    return constraints_;
  }
  int horizon() const { return horizon_; }
  const StateVector& x_init() const { return x_init_; }
  int nx() const { return dynamics_.nx(); }
  int nu() const { return dynamics_.nu(); }

  /// Copy with a different cost and constraint list; same dynamics, horizon
  /// and initial state.
  OcpProblem with(std::shared_ptr<const CostModel> cost,
                  std::vector<PureStateConstraint> constraints) const;

 private:
  StructuredDynamics dynamics_;
  std::shared_ptr<const CostModel> cost_;
  std::vector<PureStateConstraint> constraints_;
  int horizon_;
  StateVector x_init_;
};

/// Primal-dual point of the (transformed) OCP under direct multiple shooting.
struct Iterate {
  std::vector<Vector> x;       // x_0 .. x_N
  std::vector<Vector> u;       // u_0 .. u_{N-1}
  std::vector<Vector> lambda;  // lambda_0 .. lambda_N
  std::vector<Vector> nu;      // one per constraint

  static Iterate zeros(const OcpProblem& problem);
  /// Throws DimensionError when the shapes do not match the problem.
  void check(const OcpProblem& problem) const;
};

/// States obtained by rolling the dynamics forward from x_init with `controls`.
std::vector<Vector> rollout(const OcpProblem& problem,
                            const std::vector<Vector>& controls);

}  // namespace psr
