#pragma once

#include <string>
#include <vector>

#include "psriccati/dense_kkt.hpp"

namespace psr {

enum class StepRule { full, damped };
enum class ErrorNorm { l2, linf };

/// Augmented-Lagrangian schedule. Each time the inner error falls below the
/// inner tolerance w the multipliers are updated. If the constraint violation
/// is also below its target e, both targets tighten (w /= p, e /= p^0.9);
/// otherwise the penalty grows (p *= beta) and the targets reset to
/// w = 1/p, e = 1/p^0.1. The inner tolerance never drops below
/// inner_factor * tol.
struct AlSettings {
  double p_init = 5.0;
  double beta = 8.0;
  double p_max = 1e10;
  double inner_factor = 0.1;
};

struct SolverSettings {
  double tol = 1e-10;
  int max_iters = 200;
  HessianMode hessian = HessianMode::gauss_newton;
  StepRule step = StepRule::full;
  /// Step length used when step == damped.
  double damping = 1.0;
  ErrorNorm norm = ErrorNorm::l2;
  Regularization regularization;
  AlSettings al;

  /// Throws std::invalid_argument on tol <= 0, beta <= 1, p_init <= 0, or a
  /// damping factor outside (0, 1].
  void validate() const;
};

enum class SolveStatus {
  converged,
  max_iters,
  curvature_failure,
  degenerate_constraint,
  factorization_failure,
  penalty_limit,
};

const char* to_string(SolveStatus s);
SolveStatus status_from_string(const std::string& s);

struct PhaseTimes {
  double linearize_us = 0.0;
  double backward_us = 0.0;
  double forward_us = 0.0;
};

/// Per-iteration history of a solve. Entry 0 of every series describes the
/// initial point (zero step, zero timings), so each series has
/// iterations + 1 entries.
struct SolveReport {
  std::string solver;
  SolveStatus status = SolveStatus::max_iters;
  int iterations = 0;
  std::vector<double> kkt_history;
  std::vector<double> step_norms;
  std::vector<PhaseTimes> timings;
  /// Augmented Lagrangian only: penalty in force at each entry, and the
  /// iterations whose step followed a multiplier (and possibly penalty)
  /// update.
  std::vector<double> penalties;
  std::vector<int> penalty_updates;
  double total_us = 0.0;
  std::string message;

  double final_kkt_error() const {
    return kkt_history.empty() ? 0.0 : kkt_history.back();
  }
  bool converged() const { return status == SolveStatus::converged; }
};

struct SolveResult {
  Iterate solution;
  SolveReport report;
};

/// Newton's method on the transformed problem with Riccati directions.
SolveResult solve_proposed(const OcpProblem& problem, const Iterate& init,
                           const SolverSettings& settings = {});

/// Same Newton iteration with directions from the dense KKT matrix.
SolveResult solve_dense(const OcpProblem& problem, const Iterate& init,
                        const SolverSettings& settings = {});

/// Augmented Lagrangian on the pure-state constraints, inner Newton steps via
/// the unconstrained Riccati recursion. The multiplier estimates start from
/// init.nu. The returned iterate carries nu_hat + p phi(x_k), which are
/// multipliers of the original (untransformed) problem.
SolveResult solve_al(const OcpProblem& problem, const Iterate& init,
                     const SolverSettings& settings = {});

/// KKT error of the transformed problem under the chosen norm.
double kkt_error(const TransformedOcp& ocp, const Iterate& it,
                 ErrorNorm norm = ErrorNorm::l2);

enum class SoscVerdict { satisfied, not_satisfied, inconclusive };
const char* to_string(SoscVerdict v);

struct SoscResult {
  SoscVerdict verdict = SoscVerdict::inconclusive;
  int positive = 0;
  int negative = 0;
  /// Smallest eigenvalue magnitude of the KKT matrix relative to its largest.
  double margin = 0.0;
};

/// Inertia test on the exact-Hessian KKT matrix of the transformed problem:
/// the Lagrangian Hessian is positive definite on the null space of the
/// constraint Jacobian iff the KKT matrix has exactly as many positive
/// eigenvalues as primal variables and as many negative ones as constraints.
/// A relative margin below 1e-10 is reported as inconclusive.
SoscResult check_sosc(const OcpProblem& problem, const Iterate& sol);

inline constexpr double kSoscMargin = 1e-10;

}  // namespace psr
