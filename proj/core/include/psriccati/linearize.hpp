#pragma once

#include <vector>

#include "psriccati/transform.hpp"

namespace psr {

enum class HessianMode {
  /// Hessians of the (constraint-augmented) Hamiltonian.
  exact,
  /// Cost Hessians only; independent of all multipliers.
  gauss_newton,
};

/// Blocks and residuals of the Newton equations at one stage i < N.
struct StageKkt {
  Matrix A;    // I + f_x
  Matrix B;    // f_u
  Matrix Qxx;
  Matrix Qxu;
  Matrix Quu;
  Matrix C;    // nc x nx, anchor stages only
  Matrix D;    // nc x nu, anchor stages only
  Vector xbar;    // x_i + f(x_i, u_i) - x_{i+1}
  Vector lx;      // x-stationarity
  Vector lu;      // u-stationarity
  Vector phibar;  // transformed constraint residual, anchor stages only
  /// Index of the constraint anchored here, -1 for unconstrained stages.
  int constraint = -1;

  bool constrained() const { return constraint >= 0; }
};

/// The complete Newton linear system of the transformed OCP.
struct NewtonSystem {
  std::vector<StageKkt> stages;  // i = 0 .. N-1
  Matrix Qxx_terminal;
  Vector lx_terminal;  // terminal cost gradient - lambda_N
  Vector x0_residual;  // x_0 - x_init

  int horizon() const { return static_cast<int>(stages.size()); }
};

/// Offsets of every variable block in the stacked primal-dual vector
///   (lambda_0, x_0, u_0, [nu], lambda_1, x_1, u_1, [nu], ..., lambda_N, x_N)
/// where [nu] appears after u_i at anchor stages. The stacked residual and the
/// dense KKT matrix share this ordering.
struct KktLayout {
  std::vector<Eigen::Index> lambda, x, u, nu;  // nu offsets by stage, -1 if none
  std::vector<int> nu_size;
  Eigen::Index size = 0;

  static KktLayout of(const NewtonSystem& sys);
};

/// H = L_i(x, u) + lambda_next' f(x, u).
double hamiltonian(const OcpProblem& problem, int stage, const Vector& x,
                   const Vector& u, const Vector& lambda_next);

/// Gradient of the Lagrangian of the transformed problem at the iterate,
/// stacked in KktLayout order, and its l2 norm (the KKT error).
/// The initial-state block holds x_init - x_0, the derivative with respect to
/// lambda_0; every other block is the left-hand side of its condition.
struct FoncResiduals {
  Vector stacked;
  double kkt_error = 0.0;
};

/// Per-stage blocks without Hessians.
NewtonSystem evaluate_residuals(const TransformedOcp& ocp, const Iterate& it);
FoncResiduals fonc_residuals(const TransformedOcp& ocp, const Iterate& it);
Vector stack_residuals(const NewtonSystem& sys);

/// Builds the Newton linear system. Every stage is computed independently,
/// so stages may be evaluated in any order (or concurrently).
NewtonSystem linearize(const TransformedOcp& ocp, const Iterate& it,
                       HessianMode mode);

/// Fills one stage block; `with_hessians` false skips the Q blocks.
StageKkt linearize_stage(const TransformedOcp& ocp, const Iterate& it, int i,
                         HessianMode mode, bool with_hessians = true);

/// Finite-difference step used for second derivatives of the dynamics and of
/// the transformed constraints in exact mode.
inline constexpr double kCurvatureStep = 1e-5;

}  // namespace psr
