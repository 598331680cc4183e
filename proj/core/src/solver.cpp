#include "psriccati/solver.hpp"

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>

#include "psriccati/al_cost.hpp"

namespace psr {
namespace {

using Clock = std::chrono::steady_clock;

double micros_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

double norm_of(const Vector& v, ErrorNorm norm) {
  if (v.size() == 0) return 0.0;
  return norm == ErrorNorm::l2 ? v.norm() : v.lpNorm<Eigen::Infinity>();
}

void apply_step(Iterate& it, const NewtonDirection& d, double alpha) {
  for (std::size_t i = 0; i < it.x.size(); ++i) {
    it.x[i] += alpha * d.dx[i];
    it.lambda[i] += alpha * d.dlambda[i];
  }
  for (std::size_t i = 0; i < it.u.size(); ++i) it.u[i] += alpha * d.du[i];
  for (std::size_t j = 0; j < it.nu.size(); ++j) it.nu[j] += alpha * d.dnu[j];
}

struct StepOutcome {
  NewtonDirection direction;
  PhaseTimes times;
};

using DirectionFn = std::function<StepOutcome(const TransformedOcp&,
                                              const Iterate&)>;

// Records a solver failure in the report; returns false for unknown errors.
template <typename Fn>
bool guarded(SolveReport& report, Fn&& fn) {
  try {
    fn();
    return true;
  } catch (const CurvatureError& e) {
    report.status = SolveStatus::curvature_failure;
    report.message = e.what();
  } catch (const DegenerateConstraintError& e) {
    report.status = SolveStatus::degenerate_constraint;
    report.message = e.what();
  } catch (const FactorizationError& e) {
    report.status = SolveStatus::factorization_failure;
    report.message = e.what();
  }
  return false;
}

SolveResult newton_loop(const OcpProblem& problem, const Iterate& init,
                        const SolverSettings& settings, const char* name,
                        const DirectionFn& direction) {
  settings.validate();
  const auto start = Clock::now();
  const TransformedOcp ocp(problem);
  SolveResult res;
  res.solution = init;
  res.solution.check(problem);
  SolveReport& rep = res.report;
  rep.solver = name;

  const double alpha =
      settings.step == StepRule::damped ? settings.damping : 1.0;
  double err = kkt_error(ocp, res.solution, settings.norm);
  rep.kkt_history.push_back(err);
  rep.step_norms.push_back(0.0);
  rep.timings.emplace_back();

  while (err > settings.tol && rep.iterations < settings.max_iters) {
    StepOutcome step;
    if (!guarded(rep, [&] { step = direction(ocp, res.solution); })) {
      rep.total_us = micros_since(start);
      return res;
    }
    apply_step(res.solution, step.direction, alpha);
    ++rep.iterations;
    err = kkt_error(ocp, res.solution, settings.norm);
    rep.kkt_history.push_back(err);
    rep.step_norms.push_back(alpha * step.direction.norm());
    rep.timings.push_back(step.times);
  }
  rep.status = err <= settings.tol ? SolveStatus::converged
                                   : SolveStatus::max_iters;
  rep.total_us = micros_since(start);
  return res;
}

}  // namespace

void SolverSettings::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  if (!(al.beta > 1.0)) throw std::invalid_argument("beta must exceed 1");
  if (!(al.p_init > 0.0)) throw std::invalid_argument("p_init must be positive");
  if (!(damping > 0.0 && damping <= 1.0)) {
    throw std::invalid_argument("damping must lie in (0, 1]");
  }
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::curvature_failure: return "curvature_failure";
    case SolveStatus::degenerate_constraint: return "degenerate_constraint";
    case SolveStatus::factorization_failure: return "factorization_failure";
    case SolveStatus::penalty_limit: return "penalty_limit";
  }
  return "unknown";
}

SolveStatus status_from_string(const std::string& s) {
  for (auto st : {SolveStatus::converged, SolveStatus::max_iters,
                  SolveStatus::curvature_failure,
                  SolveStatus::degenerate_constraint,
                  SolveStatus::factorization_failure,
                  SolveStatus::penalty_limit}) {
    if (s == to_string(st)) return st;
  }
  throw std::invalid_argument("unknown solve status '" + s + "'");
}

const char* to_string(SoscVerdict v) {
  switch (v) {
    case SoscVerdict::satisfied: return "satisfied";
    case SoscVerdict::not_satisfied: return "not_satisfied";
    case SoscVerdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

double kkt_error(const TransformedOcp& ocp, const Iterate& it,
                 ErrorNorm norm) {
  return norm_of(fonc_residuals(ocp, it).stacked, norm);
}

SolveResult solve_proposed(const OcpProblem& problem, const Iterate& init,
                           const SolverSettings& settings) {
  const auto nc = problem.constraints().size();
  return newton_loop(
      problem, init, settings, "proposed",
      [&](const TransformedOcp& ocp, const Iterate& it) {
        StepOutcome out;
        const auto t0 = Clock::now();
        const NewtonSystem sys = linearize(ocp, it, settings.hessian);
        out.times.linearize_us = micros_since(t0);
        RiccatiSolve rs =
            solve_newton_system(sys, nc, settings.regularization);
        out.times.backward_us = rs.backward_seconds * 1e6;
        out.times.forward_us = rs.forward_seconds * 1e6;
        out.direction = std::move(rs.direction);
        return out;
      });
}

SolveResult solve_dense(const OcpProblem& problem, const Iterate& init,
                        const SolverSettings& settings) {
  const auto nc = problem.constraints().size();
  return newton_loop(problem, init, settings, "dense",
                     [&](const TransformedOcp& ocp, const Iterate& it) {
                       StepOutcome out;
                       const auto t0 = Clock::now();
                       const NewtonSystem sys =
                           linearize(ocp, it, settings.hessian);
                       out.times.linearize_us = micros_since(t0);
                       const auto t1 = Clock::now();
                       out.direction = solve_dense_kkt(sys, nc);
                       out.times.backward_us = micros_since(t1);
                       return out;
                     });
}

SolveResult solve_al(const OcpProblem& problem, const Iterate& init,
                     const SolverSettings& settings) {
  settings.validate();
  const auto start = Clock::now();
  const auto& constraints = problem.constraints();
  const int n = problem.dynamics().n();

  SolveResult res;
  res.solution = init;
  res.solution.check(problem);
  SolveReport& rep = res.report;
  rep.solver = "al";

  // Warm starts carry their multipliers into the first estimate.
  std::vector<Vector> nu_hat = init.nu;
  double p = settings.al.p_init;

  auto make_inner = [&]() {
    auto cost = std::make_shared<AugmentedLagrangianCost>(
        problem.cost_ptr(), constraints, nu_hat, p, settings.hessian,
        problem.horizon());
    return TransformedOcp(problem.with(cost, {}));
  };
  auto inner_iterate = [&](const Iterate& it) {
    Iterate inner = it;
    inner.nu.clear();
    return inner;
  };
  // Multiplier estimates of the original problem: nu_hat + p phi(q_k).
  auto estimate = [&](Iterate& it) {
    for (std::size_t j = 0; j < constraints.size(); ++j) {
      const auto k = static_cast<std::size_t>(constraints[j].stage());
      it.nu[j] = nu_hat[j] + p * constraints[j].residual(it.x[k].head(n));
    }
  };
  auto full_error = [&](Iterate& it) {
    estimate(it);
    return norm_of(original_fonc_residuals(it, problem), settings.norm);
  };

  TransformedOcp inner = make_inner();
  double err = full_error(res.solution);
  rep.kkt_history.push_back(err);
  rep.step_norms.push_back(0.0);
  rep.timings.emplace_back();
  rep.penalties.push_back(p);

  const double alpha =
      settings.step == StepRule::damped ? settings.damping : 1.0;
  double inner_target = 1.0 / p;
  double violation_target = 1.0 / std::pow(p, 0.1);
  bool failed = false;
  while (err > settings.tol && rep.iterations < settings.max_iters) {
    const double inner_tol =
        std::max(settings.al.inner_factor * settings.tol, inner_target);
    const double inner_err =
        kkt_error(inner, inner_iterate(res.solution), settings.norm);
    bool updated = false;
    if (inner_err <= inner_tol) {
      double violation = 0.0;
      for (std::size_t j = 0; j < constraints.size(); ++j) {
        const auto k = static_cast<std::size_t>(constraints[j].stage());
        const Vector phi = constraints[j].residual(res.solution.x[k].head(n));
        nu_hat[j] += p * phi;
        violation = std::max(violation, phi.lpNorm<Eigen::Infinity>());
      }
      if (violation <= violation_target) {
        inner_target /= p;
        violation_target /= std::pow(p, 0.9);
      } else {
        p *= settings.al.beta;
        if (p > settings.al.p_max) {
          rep.status = SolveStatus::penalty_limit;
          rep.message = "penalty exceeded p_max without convergence";
          failed = true;
          break;
        }
        inner_target = 1.0 / p;
        violation_target = 1.0 / std::pow(p, 0.1);
      }
      inner = make_inner();
      updated = true;
    }

    StepOutcome step;
    Iterate x_inner = inner_iterate(res.solution);
    const bool ok = guarded(rep, [&] {
      const auto t0 = Clock::now();
      const NewtonSystem sys = linearize(inner, x_inner, settings.hessian);
      step.times.linearize_us = micros_since(t0);
      RiccatiSolve rs = solve_newton_system(sys, 0, settings.regularization);
      step.times.backward_us = rs.backward_seconds * 1e6;
      step.times.forward_us = rs.forward_seconds * 1e6;
      step.direction = std::move(rs.direction);
    });
    if (!ok) {
      failed = true;
      break;
    }
    apply_step(x_inner, step.direction, alpha);
    res.solution.x = std::move(x_inner.x);
    res.solution.u = std::move(x_inner.u);
    res.solution.lambda = std::move(x_inner.lambda);
    ++rep.iterations;
    if (updated) rep.penalty_updates.push_back(rep.iterations);
    err = full_error(res.solution);
    rep.kkt_history.push_back(err);
    rep.step_norms.push_back(alpha * step.direction.norm());
    rep.timings.push_back(step.times);
    rep.penalties.push_back(p);
  }
  if (!failed) {
    rep.status = err <= settings.tol ? SolveStatus::converged
                                     : SolveStatus::max_iters;
  }
  rep.total_us = micros_since(start);
  return res;
}

SoscResult check_sosc(const OcpProblem& problem, const Iterate& sol) {
  const TransformedOcp ocp(problem);
  const NewtonSystem sys = linearize(ocp, sol, HessianMode::exact);
  const DenseKkt kkt = assemble_dense_kkt(sys);
  const PrimalDualSplit split = split_primal_dual(sys, kkt.layout);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(kkt.matrix,
                                            Eigen::EigenvaluesOnly);
  const Vector& ev = eig.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  SoscResult out;
  out.margin = ev.cwiseAbs().minCoeff() / scale;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > 0.0) {
      ++out.positive;
    } else {
      ++out.negative;
    }
  }
  if (out.margin < kSoscMargin) {
    out.verdict = SoscVerdict::inconclusive;
  } else if (out.positive == static_cast<int>(split.primal.size()) &&
             out.negative == static_cast<int>(split.dual.size())) {
    out.verdict = SoscVerdict::satisfied;
  } else {
    out.verdict = SoscVerdict::not_satisfied;
  }
  return out;
}

}  // namespace psr
