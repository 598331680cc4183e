#pragma once

#include <Eigen/Cholesky>
#include <optional>
#include <vector>

#include "psriccati/linearize.hpp"

namespace psr {

/// LDL' factorization with Bunch-Kaufman pivoting of a small symmetric
/// (possibly indefinite) matrix.
class SymmetricIndefiniteLdlt {
 public:
  explicit SymmetricIndefiniteLdlt(const Matrix& A);

  int positive() const { return positive_; }
  int negative() const { return negative_; }
  int zero() const { return zero_; }
  /// Solves A X = B in place; requires zero() == 0.
  void solve_in_place(Matrix& B) const;

 private:
  Matrix factor_;
  std::vector<int> pivots_;
  int positive_ = 0;
  int negative_ = 0;
  int zero_ = 0;
};

/// Backward-recursion output at one stage: the costate relation
///   dlambda_i = P dx_i - s
/// and the feedback laws du_i = K dx_i + k (and dnu = M dx_i + m at anchor
/// stages). The terminal entry only carries P and s.
struct StageFactor {
  Matrix P;
  Vector s;
  Matrix K;
  Vector k;
  Matrix M;
  Vector m;
  /// Kept so that new right-hand sides can be swept without refactoring.
  Matrix H;  // Qxu + A' P_next B
  std::optional<Eigen::LLT<Matrix>> llt;
  std::optional<SymmetricIndefiniteLdlt> ldlt;
};

struct RiccatiFactor {
  std::vector<StageFactor> stages;  // 0 .. N
};

struct NewtonDirection {
  std::vector<Vector> dx;       // 0 .. N
  std::vector<Vector> du;       // 0 .. N-1
  std::vector<Vector> dlambda;  // 0 .. N
  std::vector<Vector> dnu;      // per constraint

  /// l2 norm of all stacked components.
  double norm() const;
};

/// Diagonal shift added to Quu when a stage lacks positive curvature.
struct Regularization {
  bool enabled = true;
  double initial = 1e-6;
  double growth = 10.0;
  double max = 1e6;
};

/// Unconstrained update. Throws CurvatureError (carrying `stage`) when
/// G = Quu + B' P_next B is not positive definite.
StageFactor backward_stage(const StageKkt& kkt, const Matrix& P_next,
                           const Vector& s_next, int stage = -1);

/// Update through the saddle block [[G, D'], [D, 0]] at an anchor stage.
/// Falls back to backward_stage when the stage carries no constraint rows.
/// Throws DegenerateConstraintError when D loses row rank, CurvatureError when
/// G is not positive definite on the null space of D, and FactorizationError
/// when the saddle block is otherwise singular.
StageFactor backward_stage_constrained(const StageKkt& kkt,
                                       const Matrix& P_next,
                                       const Vector& s_next, int stage = -1);

/// Full backward sweep, optionally with a diagonal shift on every Quu.
RiccatiFactor backward_sweep(const NewtonSystem& sys, double quu_shift = 0.0);

/// Forward rollout of the Newton direction from a backward factorization,
/// followed by a backward pass for the costates.
NewtonDirection forward_sweep(const NewtonSystem& sys,
                              const RiccatiFactor& factor,
                              std::size_t n_constraints);

/// Direction for the right-hand sides of `rhs`, whose matrices must match the
/// system `factor` was computed from. Only the vector recursions are rerun.
NewtonDirection resolve(const NewtonSystem& rhs, const RiccatiFactor& factor,
                        std::size_t n_constraints);

struct RiccatiSolve {
  NewtonDirection direction;
  RiccatiFactor factor;
  /// Quu shift that was finally applied (0 when none was needed).
  double regularization = 0.0;
  double backward_seconds = 0.0;
  double forward_seconds = 0.0;
};

/// Computes the Newton direction of the transformed OCP in O(N). On a
/// CurvatureError the sweep is retried with an escalating Quu shift until
/// the policy's maximum is exceeded, after which the error propagates.
/// Unless a shift was applied, `refine` adds one step of iterative refinement
/// against the residual of the linear system, which brings the direction to
/// the accuracy of a pivoted dense solve when P and the multipliers are large.
RiccatiSolve solve_newton_system(const NewtonSystem& sys,
                                 std::size_t n_constraints,
                                 const Regularization& reg = {},
                                 bool refine = true);

}  // namespace psr
