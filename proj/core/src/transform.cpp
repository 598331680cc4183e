#include "psriccati/transform.hpp"

#include <utility>

namespace psr {

LookaheadMap::LookaheadMap(StructuredDynamics dyn) : dyn_(std::move(dyn)) {}

Vector LookaheadMap::value(const Vector& x) const {
  Vector g = Vector::Zero(dyn_.nx());
  g.head(dyn_.n()) = dyn_.coordinate_increment(x);
  return g;
}

Matrix LookaheadMap::jacobian(const Vector& x) const {
  Matrix gx = Matrix::Zero(dyn_.nx(), dyn_.nx());
  gx.topRows(dyn_.n()) = dyn_.coordinate_jacobian(x);
  return gx;
}

LookaheadMap make_lookahead(const StructuredDynamics& dyn) {
  return LookaheadMap(dyn);
}

StateConstraint::StateConstraint(int stage, int nc, Residual phi,
                                 Jacobian phi_x)
    : stage_(stage), nc_(nc), phi_(std::move(phi)), phi_x_(std::move(phi_x)) {
  if (stage < 1) {
    throw UnsupportedConstraintError(
        "relative-degree-1 constraint stage must satisfy k >= 1");
  }
  if (nc <= 0) throw DimensionError("constraint dimension must be positive");
}

MixedConstraint::MixedConstraint(StructuredDynamics dyn, int anchor,
                                 int original, int nc,
                                 StateConstraint::Residual phi,
                                 StateConstraint::Jacobian phi_x)
    : dyn_(std::move(dyn)),
      anchor_stage_(anchor),
      original_stage_(original),
      nc_(nc),
      phi_(std::move(phi)),
      phi_x_(std::move(phi_x)) {}

Vector MixedConstraint::predicted_state(const Vector& x,
                                        const Vector& u) const {
  Vector next = dyn_.next(x, u);
  if (relative_degree() == 2) {
    next.head(dyn_.n()) += dyn_.coordinate_increment(next);
  }
  return next;
}

Vector MixedConstraint::residual(const Vector& x, const Vector& u) const {
  return phi_(predicted_state(x, u));
}

void MixedConstraint::jacobians(const Vector& x, const Vector& u, Matrix& C,
                                Matrix& D) const {
  Matrix fx, fu;
  dyn_.increment_jacobians(x, u, fx, fu);
  fx.diagonal().array() += 1.0;
  const Vector next = dyn_.next(x, u);
  Matrix lead;
  if (relative_degree() == 2) {
    Vector z = next;
    z.head(dyn_.n()) += dyn_.coordinate_increment(next);
    // phi_x (I + g_x) with g_x = [fq_x ; 0]
    const Matrix phi_x = phi_x_(z);
    lead = phi_x;
    lead.noalias() +=
        phi_x.leftCols(dyn_.n()) * dyn_.coordinate_jacobian(next);
  } else {
    lead = phi_x_(next);
  }
  C.noalias() = lead * fx;
  D.noalias() = lead * fu;
}

MixedConstraint transform_constraint(const StructuredDynamics& dyn,
                                     const PureStateConstraint& c) {
  if (c.stage() < 2) {
    throw UnsupportedConstraintError(
        "transform_constraint: pure-state constraint needs k >= 2");
  }
  const int n = dyn.n();
  auto phi = [c, n](const Vector& x) { return c.residual(x.head(n)); };
  auto phi_x = [c](const Vector& x) { return c.state_jacobian(x); };
  return MixedConstraint(dyn, c.stage() - 2, c.stage(), c.nc(), phi, phi_x);
}

MixedConstraint transform_constraint_rd1(const StructuredDynamics& dyn,
                                         const StateConstraint& c) {
  if (c.stage() < 1) {
    throw UnsupportedConstraintError(
        "transform_constraint_rd1: constraint needs k >= 1");
  }
  auto phi = [c](const Vector& x) { return c.residual(x); };
  auto phi_x = [c](const Vector& x) { return c.jacobian(x); };
  return MixedConstraint(dyn, c.stage() - 1, c.stage(), c.nc(), phi, phi_x);
}

TransformedOcp::TransformedOcp(OcpProblem problem)
    : problem_(std::move(problem)),
      anchor_index_(static_cast<std::size_t>(problem_.horizon()) + 1, -1) {
  const auto& cs = problem_.constraints();
  constraints_.reserve(cs.size());
  for (std::size_t j = 0; j < cs.size(); ++j) {
    constraints_.push_back(transform_constraint(problem_.dynamics(), cs[j]));
    anchor_index_[static_cast<std::size_t>(cs[j].stage() - 2)] =
        static_cast<int>(j);
  }
}

Iterate reconstruct_multipliers(const Iterate& sol, const OcpProblem& problem) {
  sol.check(problem);
  Iterate out = sol;
  const auto& dyn = problem.dynamics();
  const int n = dyn.n();
  for (std::size_t j = 0; j < problem.constraints().size(); ++j) {
    const auto& c = problem.constraints()[j];
    const auto k = static_cast<std::size_t>(c.stage());
    const Vector phi_t_nu =
        c.state_jacobian(sol.x[k]).transpose() * sol.nu[j];
    out.lambda[k] += phi_t_nu;
    // (I + g_x') a with a = [aq; 0] only touches through the fq_x' aq term.
    Vector shifted = phi_t_nu;
    shifted += dyn.coordinate_jacobian(sol.x[k - 1]).transpose() *
               phi_t_nu.head(n);
    out.lambda[k - 1] += shifted;
  }
  return out;
}

Vector original_fonc_residuals(const Iterate& sol, const OcpProblem& problem) {
  sol.check(problem);
  const auto& dyn = problem.dynamics();
  const auto& cost = problem.cost();
  const int N = problem.horizon();
  const int nx = dyn.nx();
  const int nu = dyn.nu();

  // Extra x-stationarity terms phi_x' nu at each original constraint stage.
  std::vector<Vector> extra(static_cast<std::size_t>(N) + 1,
                            Vector::Zero(nx));
  Eigen::Index n_con = 0;
  for (std::size_t j = 0; j < problem.constraints().size(); ++j) {
    const auto& c = problem.constraints()[j];
    const auto k = static_cast<std::size_t>(c.stage());
    extra[k] += c.state_jacobian(sol.x[k]).transpose() * sol.nu[j];
    n_con += c.nc();
  }

  Vector r(nx + N * (2 * nx + nu) + nx + n_con);
  Eigen::Index pos = 0;
  auto push = [&](const Vector& v) {
    r.segment(pos, v.size()) = v;
    pos += v.size();
  };

  push(sol.x[0] - problem.x_init().stacked());
  Matrix fx, fu;
  Vector lx, lu;
  for (int i = 0; i < N; ++i) {
    const auto s = static_cast<std::size_t>(i);
    dyn.increment_jacobians(sol.x[s], sol.u[s], fx, fu);
    cost.stage_gradient(i, sol.x[s], sol.u[s], lx, lu);
    push(lx + fx.transpose() * sol.lambda[s + 1] + sol.lambda[s + 1] -
         sol.lambda[s] + extra[s]);
    push(lu + fu.transpose() * sol.lambda[s + 1]);
    push(dyn.next(sol.x[s], sol.u[s]) - sol.x[s + 1]);
  }
  const auto Ns = static_cast<std::size_t>(N);
  push(cost.terminal_gradient(sol.x[Ns]) - sol.lambda[Ns] + extra[Ns]);
  for (const auto& c : problem.constraints()) {
    const auto k = static_cast<std::size_t>(c.stage());
    push(c.residual(sol.x[k].head(dyn.n())));
  }
  return r;
}

double original_fonc_residual(const Iterate& sol, const OcpProblem& problem) {
  return original_fonc_residuals(sol, problem).norm();
}

}  // namespace psr
