#include <gtest/gtest.h>

#include <Eigen/Cholesky>
#include <algorithm>
#include <memory>
#include <random>

#include "psriccati/solver.hpp"
#include "support/test_problems.hpp"

namespace psr {
namespace {

using testing::random_vector;

OcpProblem di_half_squares() {
  // L = 1/2 (q^2 + u^2) on the unit-step double integrator.
  auto cost = std::make_shared<QuadraticCost>(QuadraticCost::diagonal(
      Vector::Unit(2, 0), Vector::Ones(1), Vector::Zero(2)));
  return OcpProblem(double_integrator_dynamics(1, 0.1), cost, {}, 5,
                    StateVector(Vector::Zero(1), Vector::Zero(1)));
}

// Textbook finite-horizon LQR for x' = A x + B u with stage cost
// 1/2 x'Qx + 1/2 u'Ru and terminal 1/2 x'Qf x. Costates follow from
// lambda_i = P_i x_i.
Iterate lqr_optimum(const OcpProblem& prob) {
  const int N = prob.horizon();
  const int nx = prob.nx();
  const int nu = prob.nu();
  const Vector x0 = Vector::Zero(nx);
  const Vector u0 = Vector::Zero(nu);
  Matrix fx, fu;
  prob.dynamics().increment_jacobians(x0, u0, fx, fu);
  const Matrix A = Matrix::Identity(nx, nx) + fx;
  const Matrix& B = fu;
  Matrix Q, S, R;
  prob.cost().stage_hessian(0, x0, u0, Q, S, R);
  const Matrix Qf = prob.cost().terminal_hessian(x0);

  std::vector<Matrix> P(N + 1), K(N);
  P[N] = Qf;
  for (int i = N - 1; i >= 0; --i) {
    const Matrix G = R + B.transpose() * P[i + 1] * B;
    K[i] = -G.ldlt().solve(B.transpose() * P[i + 1] * A);
    P[i] = Q + A.transpose() * P[i + 1] * A +
           A.transpose() * P[i + 1] * B * K[i];
  }
  Iterate it = Iterate::zeros(prob);
  it.x[0] = prob.x_init().stacked();
  for (int i = 0; i < N; ++i) {
    it.u[i] = K[i] * it.x[i];
    it.x[i + 1] = A * it.x[i] + B * it.u[i];
  }
  for (int i = 0; i <= N; ++i) it.lambda[i] = P[i] * it.x[i];
  return it;
}

TEST(Hamiltonian, ZeroCostZeroCostateIsZero) {
  auto cost = std::make_shared<QuadraticCost>(QuadraticCost::diagonal(
      Vector::Zero(2), Vector::Zero(1), Vector::Zero(2)));
  const OcpProblem prob(pendulum_dynamics(0.1, 9.81, 1.0, 0.0), cost, {}, 3,
                        StateVector(Vector::Ones(1), Vector::Ones(1)));
  EXPECT_EQ(hamiltonian(prob, 0, Vector::Constant(2, 0.4), Vector::Ones(1),
                        Vector::Zero(2)),
            0.0);
}

TEST(Hamiltonian, HandEvaluation) {
  const OcpProblem prob = di_half_squares();
  const Vector x = (Vector(2) << 1, 0).finished();
  EXPECT_NEAR(hamiltonian(prob, 0, x, Vector::Constant(1, 2.0), Vector::Ones(2)),
              2.7, 1e-15);
}

TEST(Hamiltonian, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  const OcpProblem prob = make_model("cartpole", ModelParams{});
  for (int trial = 0; trial < 30; ++trial) {
    const Vector x = random_vector(rng, 4);
    const Vector u = random_vector(rng, 1);
    const Vector lam = random_vector(rng, 4);
    Vector lx, lu;
    Matrix fx, fu;
    prob.cost().stage_gradient(0, x, u, lx, lu);
    prob.dynamics().increment_jacobians(x, u, fx, fu);
    const Vector hx = lx + fx.transpose() * lam;
    const Vector hu = lu + fu.transpose() * lam;
    const double h = 1e-6;
    for (int j = 0; j < 4; ++j) {
      Vector xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      const double fd = (hamiltonian(prob, 0, xp, u, lam) -
                         hamiltonian(prob, 0, xm, u, lam)) / (2 * h);
      EXPECT_NEAR(fd, hx(j), 1e-5);
    }
    const double fd = (hamiltonian(prob, 0, x, u + Vector::Constant(1, h), lam) -
                       hamiltonian(prob, 0, x, u - Vector::Constant(1, h), lam)) /
                      (2 * h);
    EXPECT_NEAR(fd, hu(0), 1e-5);
  }
}

TEST(FoncResiduals, AnalyticLqrOptimumIsStationary) {
  ModelParams p;
  p.horizon = 25;
  p.dim = 2;
  p.x_init = (Vector(4) << 1.0, -2.0, 0.5, 0.3).finished();
  const OcpProblem prob = make_model("double_integrator", p);
  const TransformedOcp ocp(prob);
  EXPECT_LE(fonc_residuals(ocp, lqr_optimum(prob)).kkt_error, 1e-12);
}

TEST(FoncResiduals, ZeroIterateResidualIsInitialState) {
  ModelParams p;
  p.horizon = 35;
  p.x_init = (Vector(2) << 3.0, -4.0).finished();
  const OcpProblem prob = make_model("double_integrator", p);
  const TransformedOcp ocp(prob);
  EXPECT_EQ(fonc_residuals(ocp, Iterate::zeros(prob)).kkt_error, 5.0);
}

TEST(FoncResiduals, StackEqualsLagrangianGradient) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 40; ++trial) {
    const OcpProblem prob = testing::random_problem(rng);
    const TransformedOcp ocp(prob);
    const Iterate it = testing::random_iterate(prob, rng);
    const Vector r = fonc_residuals(ocp, it).stacked;
    // The Lagrangian of an LQ problem is quadratic, so a unit central
    // difference is exact up to rounding.
    const Vector g = testing::lagrangian_gradient_fd(ocp, it, 1.0);
    ASSERT_EQ(r.size(), g.size());
    EXPECT_LE((r - g).lpNorm<Eigen::Infinity>(), 1e-10);
  }
}

TEST(FoncResiduals, StackEqualsLagrangianGradientNonlinear) {
  std::mt19937_64 rng(23);
  testing::RandomProblemOptions opt;
  opt.nonlinear = true;
  opt.horizon_max = 20;
  for (int trial = 0; trial < 20; ++trial) {
    const OcpProblem prob = testing::random_problem(rng, opt);
    const TransformedOcp ocp(prob);
    const Iterate it = testing::random_iterate(prob, rng);
    const Vector r = fonc_residuals(ocp, it).stacked;
    const Vector g = testing::lagrangian_gradient_fd(ocp, it, 1e-5);
    EXPECT_LE((r - g).lpNorm<Eigen::Infinity>(), 1e-6);
  }
}

void expect_same(const StageKkt& a, const StageKkt& b) {
  EXPECT_EQ(a.A, b.A);
  EXPECT_EQ(a.B, b.B);
  EXPECT_EQ(a.Qxx, b.Qxx);
  EXPECT_EQ(a.Qxu, b.Qxu);
  EXPECT_EQ(a.Quu, b.Quu);
  EXPECT_EQ(a.C, b.C);
  EXPECT_EQ(a.D, b.D);
  EXPECT_EQ(a.xbar, b.xbar);
  EXPECT_EQ(a.lx, b.lx);
  EXPECT_EQ(a.lu, b.lu);
  EXPECT_EQ(a.phibar, b.phibar);
  EXPECT_EQ(a.constraint, b.constraint);
}

TEST(Linearize, ModesCoincideOnLqProblems) {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 20; ++trial) {
    const OcpProblem prob = testing::random_problem(rng);
    const TransformedOcp ocp(prob);
    const Iterate it = testing::random_iterate(prob, rng);
    const NewtonSystem a = linearize(ocp, it, HessianMode::exact);
    const NewtonSystem b = linearize(ocp, it, HessianMode::gauss_newton);
    for (int i = 0; i < a.horizon(); ++i) expect_same(a.stages[i], b.stages[i]);
    EXPECT_EQ(a.Qxx_terminal, b.Qxx_terminal);
    EXPECT_EQ(a.lx_terminal, b.lx_terminal);
  }
}

TEST(Linearize, GridOf35GivesStageAndTerminalBlocks) {
  const OcpProblem prob =
      make_model("double_integrator", testing::double_integrator_waypoints(35));
  const TransformedOcp ocp(prob);
  const NewtonSystem sys = linearize(ocp, Iterate::zeros(prob), HessianMode::exact);
  EXPECT_EQ(sys.horizon(), 35);
  EXPECT_EQ(sys.Qxx_terminal.rows(), 2);
  EXPECT_EQ(sys.lx_terminal.size(), 2);
  int anchors = 0;
  for (const auto& s : sys.stages) anchors += s.constrained();
  EXPECT_EQ(anchors, 2);
  EXPECT_TRUE(sys.stages[8].constrained());
  EXPECT_TRUE(sys.stages[23].constrained());
  const KktLayout l = KktLayout::of(sys);
  EXPECT_EQ(l.size, 36 * 2 + 36 * 2 + 35 + 2);
}

// Hessian blocks of L + lambda' f + nu' c at an anchor stage compared with
// central differences of the analytic gradient.
TEST(Linearize, ExactAnchorHessianMatchesFiniteDifferences) {
  std::mt19937_64 rng(25);
  for (const char* name : {"pendulum", "cartpole"}) {
    ModelParams p;
    p.horizon = 10;
    ConstraintSpec c;
    c.stage = 6;
    c.kind = ConstraintKind::endpoint;
    p.constraints = {c};
    const OcpProblem prob = make_model(name, p);
    const TransformedOcp ocp(prob);
    const auto& mc = ocp.constraints()[0];
    const int a = mc.anchor_stage();
    for (int trial = 0; trial < 10; ++trial) {
      const Iterate it = testing::random_iterate(prob, rng);
      const StageKkt kkt = linearize_stage(ocp, it, a, HessianMode::exact);
      ASSERT_TRUE(kkt.constrained());
      const int nx = prob.nx(), nu = prob.nu();
      auto grad = [&](const Vector& z) {
        const Vector x = z.head(nx), u = z.tail(nu);
        Vector lx, lu;
        Matrix fx, fu, C, D;
        prob.cost().stage_gradient(a, x, u, lx, lu);
        prob.dynamics().increment_jacobians(x, u, fx, fu);
        mc.jacobians(x, u, C, D);
        Vector g(nx + nu);
        g << lx + fx.transpose() * it.lambda[a + 1] + C.transpose() * it.nu[0],
            lu + fu.transpose() * it.lambda[a + 1] + D.transpose() * it.nu[0];
        return g;
      };
      Vector z(nx + nu);
      z << it.x[a], it.u[a];
      Matrix H(nx + nu, nx + nu);
      const double h = 1e-5;
      for (int j = 0; j < nx + nu; ++j) {
        Vector zp = z, zm = z;
        zp(j) += h;
        zm(j) -= h;
        H.col(j) = (grad(zp) - grad(zm)) / (2 * h);
      }
      H = 0.5 * (H + H.transpose()).eval();
      EXPECT_LE((kkt.Qxx - H.topLeftCorner(nx, nx)).norm(), 1e-4) << name;
      EXPECT_LE((kkt.Qxu - H.topRightCorner(nx, nu)).norm(), 1e-4) << name;
      EXPECT_LE((kkt.Quu - H.bottomRightCorner(nu, nu)).norm(), 1e-4) << name;
    }
  }
}

TEST(Linearize, StagesAreIndependentOfEvaluationOrder) {
  std::mt19937_64 rng(26);
  testing::RandomProblemOptions opt;
  opt.nonlinear = true;
  for (int trial = 0; trial < 10; ++trial) {
    const OcpProblem prob = testing::random_problem(rng, opt);
    const TransformedOcp ocp(prob);
    const Iterate it = testing::random_iterate(prob, rng);
    const NewtonSystem sys = linearize(ocp, it, HessianMode::exact);
    std::vector<int> order(static_cast<std::size_t>(prob.horizon()));
    for (int i = 0; i < prob.horizon(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (int i : order)
      expect_same(linearize_stage(ocp, it, i, HessianMode::exact), sys.stages[i]);
  }
}

TEST(Linearize, GaussNewtonIgnoresMultipliersInHessians) {
  std::mt19937_64 rng(27);
  const OcpProblem prob = make_model("pendulum", testing::pendulum_waypoint());
  const TransformedOcp ocp(prob);
  Iterate a = testing::random_iterate(prob, rng);
  Iterate b = a;
  for (auto& l : b.lambda) l = random_vector(rng, l.size());
  for (auto& n : b.nu) n = random_vector(rng, n.size());
  const NewtonSystem sa = linearize(ocp, a, HessianMode::gauss_newton);
  const NewtonSystem sb = linearize(ocp, b, HessianMode::gauss_newton);
  for (int i = 0; i < sa.horizon(); ++i) {
    EXPECT_EQ(sa.stages[i].Qxx, sb.stages[i].Qxx);
    EXPECT_EQ(sa.stages[i].Quu, sb.stages[i].Quu);
  }
}

}  // namespace
}  // namespace psr
