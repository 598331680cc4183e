#include "psriccati/linearize.hpp"

namespace psr {
namespace {

// z = (x, u) -> [f_x' lambda + C' nu ; f_u' lambda + D' nu]
Vector constraint_weighted_gradient(const TransformedOcp& ocp, int i,
                                    const Vector& x, const Vector& u,
                                    const Vector& lambda_next,
                                    const Vector* nu) {
  const auto& dyn = ocp.problem().dynamics();
  Matrix fx, fu;
  dyn.increment_jacobians(x, u, fx, fu);
  Vector g(dyn.nx() + dyn.nu());
  g.head(dyn.nx()).noalias() = fx.transpose() * lambda_next;
  g.tail(dyn.nu()).noalias() = fu.transpose() * lambda_next;
  if (nu != nullptr) {
    Matrix C, D;
    ocp.constraints()[ocp.constraint_at_anchor(i)].jacobians(x, u, C, D);
    g.head(dyn.nx()).noalias() += C.transpose() * *nu;
    g.tail(dyn.nu()).noalias() += D.transpose() * *nu;
  }
  return g;
}

// Central differences of the analytic weighted Jacobians.
Matrix constraint_curvature(const TransformedOcp& ocp, int i, const Vector& x,
                            const Vector& u, const Vector& lambda_next,
                            const Vector* nu) {
  const Eigen::Index nx = x.size();
  const Eigen::Index nz = nx + u.size();
  Matrix H(nz, nz);
  Vector xp, up;
  for (Eigen::Index j = 0; j < nz; ++j) {
    xp = x;
    up = u;
    Vector xm = x, um = u;
    if (j < nx) {
      xp(j) += kCurvatureStep;
      xm(j) -= kCurvatureStep;
    } else {
      up(j - nx) += kCurvatureStep;
      um(j - nx) -= kCurvatureStep;
    }
    H.col(j) = (constraint_weighted_gradient(ocp, i, xp, up, lambda_next, nu) -
                constraint_weighted_gradient(ocp, i, xm, um, lambda_next, nu)) /
               (2.0 * kCurvatureStep);
  }
  return 0.5 * (H + H.transpose());
}

}  // namespace

KktLayout KktLayout::of(const NewtonSystem& sys) {
  KktLayout l;
  const int N = sys.horizon();
  const Eigen::Index nx = sys.Qxx_terminal.rows();
  Eigen::Index pos = 0;
  for (int i = 0; i < N; ++i) {
    const auto& st = sys.stages[static_cast<std::size_t>(i)];
    l.lambda.push_back(pos);
    pos += nx;
    l.x.push_back(pos);
    pos += nx;
    l.u.push_back(pos);
    pos += st.B.cols();
    if (st.constrained()) {
      l.nu.push_back(pos);
      l.nu_size.push_back(static_cast<int>(st.C.rows()));
      pos += st.C.rows();
    } else {
      l.nu.push_back(-1);
      l.nu_size.push_back(0);
    }
  }
  l.lambda.push_back(pos);
  pos += nx;
  l.x.push_back(pos);
  pos += nx;
  l.size = pos;
  return l;
}

double hamiltonian(const OcpProblem& problem, int stage, const Vector& x,
                   const Vector& u, const Vector& lambda_next) {
  return problem.cost().stage(stage, x, u) +
         lambda_next.dot(problem.dynamics().increment(x, u));
}

StageKkt linearize_stage(const TransformedOcp& ocp, const Iterate& it, int i,
                         HessianMode mode, bool with_hessians) {
  const auto& problem = ocp.problem();
  const auto& dyn = problem.dynamics();
  const auto s = static_cast<std::size_t>(i);
  const Vector& x = it.x[s];
  const Vector& u = it.u[s];
  const Vector& lam_next = it.lambda[s + 1];

  StageKkt st;
  Matrix fx;
  dyn.increment_jacobians(x, u, fx, st.B);
  st.A = std::move(fx);
  const Vector f_lam_x = st.A.transpose() * lam_next;
  st.A.diagonal().array() += 1.0;

  st.xbar = x + dyn.increment(x, u) - it.x[s + 1];
  problem.cost().stage_gradient(i, x, u, st.lx, st.lu);
  // H_x' + lambda_{i+1} - lambda_i
  st.lx += f_lam_x + lam_next - it.lambda[s];
  st.lu.noalias() += st.B.transpose() * lam_next;

  st.constraint = ocp.constraint_at_anchor(i);
  const Vector* nu = nullptr;
  if (st.constrained()) {
    const auto& mc = ocp.constraints()[static_cast<std::size_t>(st.constraint)];
    nu = &it.nu[static_cast<std::size_t>(st.constraint)];
    mc.jacobians(x, u, st.C, st.D);
    st.phibar = mc.residual(x, u);
    st.lx.noalias() += st.C.transpose() * *nu;
    st.lu.noalias() += st.D.transpose() * *nu;
  }

  if (with_hessians) {
    problem.cost().stage_hessian(i, x, u, st.Qxx, st.Qxu, st.Quu);
    if (mode == HessianMode::exact) {
      const Matrix H = constraint_curvature(ocp, i, x, u, lam_next, nu);
      const Eigen::Index nx = dyn.nx();
      const Eigen::Index nuu = dyn.nu();
      st.Qxx += H.topLeftCorner(nx, nx);
      st.Qxu += H.topRightCorner(nx, nuu);
      st.Quu += H.bottomRightCorner(nuu, nuu);
    }
  }
  return st;
}

namespace {

NewtonSystem build(const TransformedOcp& ocp, const Iterate& it,
                   HessianMode mode, bool with_hessians) {
  const auto& problem = ocp.problem();
  it.check(problem);
  const int N = problem.horizon();
  NewtonSystem sys;
  sys.stages.resize(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    sys.stages[static_cast<std::size_t>(i)] =
        linearize_stage(ocp, it, i, mode, with_hessians);
  }
  const auto Ns = static_cast<std::size_t>(N);
  sys.lx_terminal =
      problem.cost().terminal_gradient(it.x[Ns]) - it.lambda[Ns];
  if (with_hessians) {
    sys.Qxx_terminal = problem.cost().terminal_hessian(it.x[Ns]);
  } else {
    sys.Qxx_terminal = Matrix::Zero(problem.nx(), problem.nx());
  }
  sys.x0_residual = it.x[0] - problem.x_init().stacked();
  return sys;
}

}  // namespace

NewtonSystem linearize(const TransformedOcp& ocp, const Iterate& it,
                       HessianMode mode) {
  return build(ocp, it, mode, true);
}

NewtonSystem evaluate_residuals(const TransformedOcp& ocp, const Iterate& it) {
  return build(ocp, it, HessianMode::gauss_newton, false);
}

Vector stack_residuals(const NewtonSystem& sys) {
  const KktLayout l = KktLayout::of(sys);
  Vector r(l.size);
  const Eigen::Index nx = sys.x0_residual.size();
  r.segment(l.lambda[0], nx) = -sys.x0_residual;
  const int N = sys.horizon();
  for (int i = 0; i < N; ++i) {
    const auto s = static_cast<std::size_t>(i);
    const auto& st = sys.stages[s];
    r.segment(l.x[s], nx) = st.lx;
    r.segment(l.u[s], st.lu.size()) = st.lu;
    if (st.constrained()) r.segment(l.nu[s], st.phibar.size()) = st.phibar;
    r.segment(l.lambda[s + 1], nx) = st.xbar;
  }
  r.segment(l.x[static_cast<std::size_t>(N)], nx) = sys.lx_terminal;
  return r;
}

FoncResiduals fonc_residuals(const TransformedOcp& ocp, const Iterate& it) {
  FoncResiduals out;
  out.stacked = stack_residuals(evaluate_residuals(ocp, it));
  out.kkt_error = out.stacked.norm();
  return out;
}

}  // namespace psr
