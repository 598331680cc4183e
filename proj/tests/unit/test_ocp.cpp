#include <gtest/gtest.h>

#include <random>

#include "psriccati/models.hpp"
#include "support/test_problems.hpp"

namespace psr {
namespace {

using testing::random_vector;

// Central-difference Jacobian of the full increment f with respect to (x, u).
void fd_jacobians(const StructuredDynamics& dyn, const Vector& x,
                  const Vector& u, Matrix& fx, Matrix& fu, double h = 1e-6) {
  fx.resize(dyn.nx(), dyn.nx());
  fu.resize(dyn.nx(), dyn.nu());
  for (int j = 0; j < dyn.nx(); ++j) {
    Vector xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    fx.col(j) = (dyn.increment(xp, u) - dyn.increment(xm, u)) / (2 * h);
  }
  for (int j = 0; j < dyn.nu(); ++j) {
    Vector up = u, um = u;
    up(j) += h;
    um(j) -= h;
    fu.col(j) = (dyn.increment(x, up) - dyn.increment(x, um)) / (2 * h);
  }
}

double rel_err(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

TEST(StepDynamics, DoubleIntegratorKinematics) {
  const auto dyn = double_integrator_dynamics(1, 0.1);
  const StateVector x(Vector::Zero(1), Vector::Ones(1));
  const StateVector next = step_dynamics(dyn, x, Vector::Zero(1));
  EXPECT_DOUBLE_EQ(next.q()(0), 0.1);
  EXPECT_DOUBLE_EQ(next.v()(0), 1.0);
}

TEST(StepDynamics, ZeroIncrementIsIdentity) {
  const StructuredDynamics dyn(
      2, 1, [](const Vector&) -> Vector { return Vector::Zero(2); },
      [](const Vector&) -> Matrix { return Matrix::Zero(2, 4); },
      [](const Vector&, const Vector&) -> Vector { return Vector::Zero(2); },
      [](const Vector&, const Vector&, Matrix&, Matrix&) {});
  const StateVector x(Vector::Constant(2, 0.3), Vector::Constant(2, -1.2));
  const StateVector next = step_dynamics(dyn, x, Vector::Constant(1, 7.0));
  EXPECT_EQ(next.stacked(), x.stacked());
}

TEST(StepDynamics, PendulumEquilibrium) {
  const auto dyn = pendulum_dynamics(0.1, 9.81, 1.0, 0.0);
  const StateVector x(Vector::Zero(1), Vector::Zero(1));
  const StateVector next = step_dynamics(dyn, x, Vector::Zero(1));
  EXPECT_EQ(next.stacked(), Vector::Zero(2));
}

TEST(StepDynamics, RejectsDimensionMismatch) {
  const auto dyn = double_integrator_dynamics(2, 0.1);
  const StateVector x(Vector::Zero(2), Vector::Zero(2));
  EXPECT_THROW(step_dynamics(dyn, x, Vector::Zero(1)), DimensionError);
  EXPECT_THROW(step_dynamics(dyn, StateVector(Vector::Zero(1), Vector::Zero(1)),
                             Vector::Zero(2)),
               DimensionError);
}

TEST(StateVector, PartitionIsStructural) {
  EXPECT_THROW(StateVector(Vector::Zero(2), Vector::Zero(3)), DimensionError);
  EXPECT_THROW(StateVector::from_stacked(Vector::Zero(3)), DimensionError);
  const StateVector s = StateVector::from_stacked(Vector::LinSpaced(4, 1, 4));
  EXPECT_EQ(s.n(), 2);
  EXPECT_EQ(s.nx(), 4);
  EXPECT_EQ(s.q()(1), 2.0);
  EXPECT_EQ(s.v()(0), 3.0);
}

TEST(StructuredDynamics, RejectsMoreControlsThanCoordinates) {
  EXPECT_THROW(
      linear_second_order_dynamics(Matrix::Zero(1, 2), Matrix::Zero(1, 2),
                                   Matrix::Zero(1, 2)),
      DimensionError);
}

TEST(MakeModel, DoubleIntegratorTableGrid) {
  ModelParams p;
  p.horizon = 35;
  const OcpProblem prob = make_model("double_integrator", p);
  EXPECT_EQ(prob.horizon(), 35);
  EXPECT_EQ(prob.dynamics().n(), 1);
  EXPECT_EQ(prob.nx(), 2);
  EXPECT_EQ(prob.nu(), 1);
}

TEST(MakeModel, RejectsEarlyConstraintStage) {
  ModelParams p;
  ConstraintSpec c;
  c.stage = 1;
  p.constraints = {c};
  EXPECT_THROW(make_model("pendulum", p), UnsupportedConstraintError);
  c.kind = ConstraintKind::endpoint;
  p.constraints = {c};
  EXPECT_THROW(make_model("pendulum", p), UnsupportedConstraintError);
}

TEST(MakeModel, RejectsUnknownName) {
  EXPECT_THROW(make_model("quadruped", ModelParams{}), std::invalid_argument);
}

TEST(MakeModel, RejectsBadStageSchedules) {
  ModelParams p;
  p.horizon = 20;
  ConstraintSpec a, b;
  a.stage = 5;
  b.stage = 6;
  p.constraints = {a, b};
  EXPECT_THROW(make_model("double_integrator", p), UnsupportedConstraintError);
  b.stage = 5;
  p.constraints = {a, b};
  EXPECT_THROW(make_model("double_integrator", p), UnsupportedConstraintError);
  b.stage = 3;
  p.constraints = {a, b};
  EXPECT_THROW(make_model("double_integrator", p), UnsupportedConstraintError);
  b.stage = 21;
  p.constraints = {a, b};
  EXPECT_THROW(make_model("double_integrator", p), UnsupportedConstraintError);
  b.stage = 20;
  p.constraints = {a, b};
  EXPECT_NO_THROW(make_model("double_integrator", p));
}

TEST(MakeModel, CartpoleRolloutFeasibility) {
  ModelParams p;
  p.horizon = 20;
  p.dt = 0.05;
  ConstraintSpec c;
  c.stage = 3;
  c.coordinates = {0};
  c.targets = Vector::Constant(1, 0.25);
  p.constraints = {c};
  const OcpProblem prob = make_model("cartpole", p);

  std::vector<Vector> controls(20, Vector::Constant(1, 2.0));
  const auto xs = rollout(prob, controls);
  // Hand rollout of the cart coordinate: the pole angle stays at zero for the
  // first two steps, so the cart accelerates at u / mc = 2.
  double q = 0.0, v = 0.0;
  for (int i = 0; i < 3; ++i) {
    q += 0.05 * v;
    v += 0.05 * 2.0;
  }
  EXPECT_NEAR(xs[3](0), q, 1e-12);
  const Vector phi = prob.constraints()[0].residual(xs[3].head(2));
  EXPECT_NEAR(phi(0), q - 0.25, 1e-12);
}

TEST(ZooJacobians, MatchFiniteDifferencesAtRandomPoints) {
  std::mt19937_64 rng(7);
  const std::vector<StructuredDynamics> zoo{
      double_integrator_dynamics(3, 0.1), pendulum_dynamics(0.1, 9.81, 1.0, 0.2),
      cartpole_dynamics(0.05, 9.81, 0.5, 1.0, 0.2)};
  for (const auto& dyn : zoo) {
    for (int trial = 0; trial < 100; ++trial) {
      const Vector x = random_vector(rng, dyn.nx(), 2.0);
      const Vector u = random_vector(rng, dyn.nu(), 2.0);
      Matrix fx, fu, fx_fd, fu_fd;
      dyn.increment_jacobians(x, u, fx, fu);
      fd_jacobians(dyn, x, u, fx_fd, fu_fd);
      EXPECT_LE(rel_err(fx, fx_fd), 1e-5);
      EXPECT_LE(rel_err(fu, fu_fd), 1e-5);
    }
  }
}

TEST(ZooJacobians, EndpointConstraintMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  for (const char* name : {"pendulum", "cartpole"}) {
    ModelParams p;
    ConstraintSpec c;
    c.stage = 5;
    c.kind = ConstraintKind::endpoint;
    p.constraints = {c};
    const OcpProblem prob = make_model(name, p);
    const auto& con = prob.constraints()[0];
    const int n = prob.dynamics().n();
    for (int trial = 0; trial < 100; ++trial) {
      const Vector q = random_vector(rng, n, 3.0);
      Matrix J(1, n);
      for (int j = 0; j < n; ++j) {
        Vector qp = q, qm = q;
        qp(j) += 1e-6;
        qm(j) -= 1e-6;
        J.col(j) = (con.residual(qp) - con.residual(qm)) / 2e-6;
      }
      EXPECT_LE(rel_err(con.jacobian(q), J), 1e-5);
    }
  }
}

TEST(ZooDynamics, CoordinateUpdateNeverReadsControl) {
  std::mt19937_64 rng(9);
  const std::vector<StructuredDynamics> zoo{
      double_integrator_dynamics(2, 0.1), pendulum_dynamics(0.1, 9.81, 1.0, 0.0),
      cartpole_dynamics(0.05, 9.81, 0.5, 1.0, 0.2)};
  for (const auto& dyn : zoo) {
    for (int trial = 0; trial < 20; ++trial) {
      const Vector x = random_vector(rng, dyn.nx());
      const Vector a = dyn.next(x, random_vector(rng, dyn.nu(), 10.0));
      const Vector b = dyn.next(x, random_vector(rng, dyn.nu(), 10.0));
      for (int i = 0; i < dyn.n(); ++i) EXPECT_EQ(a(i), b(i));
    }
  }
}

TEST(QuadraticCost, RejectsAsymmetricWeights) {
  Matrix Q = Matrix::Identity(2, 2);
  Q(0, 1) = 1e-9;
  EXPECT_THROW(QuadraticCost(Q, Matrix::Zero(2, 1), Matrix::Identity(1, 1),
                             Matrix::Identity(2, 2), Vector::Zero(2),
                             Vector::Zero(1)),
               DimensionError);
}

TEST(Iterate, ZerosMatchProblemShape) {
  const OcpProblem prob =
      make_model("double_integrator", testing::double_integrator_waypoints());
  const Iterate it = Iterate::zeros(prob);
  EXPECT_EQ(it.x.size(), 36u);
  EXPECT_EQ(it.u.size(), 35u);
  EXPECT_EQ(it.lambda.size(), 36u);
  EXPECT_EQ(it.nu.size(), 2u);
  EXPECT_NO_THROW(it.check(prob));
  Iterate bad = it;
  bad.u.pop_back();
  EXPECT_THROW(bad.check(prob), DimensionError);
}

}  // namespace
}  // namespace psr
