#include <gtest/gtest.h>

#include <random>

#include "psriccati/dense_kkt.hpp"
#include "support/test_problems.hpp"

namespace psr {
namespace {

using testing::random_matrix;
using testing::random_vector;

Matrix m1(double v) { return Matrix::Constant(1, 1, v); }
Vector v1(double v) { return Vector::Constant(1, v); }

StageKkt scalar_stage() {
  StageKkt k;
  k.A = m1(1);
  k.B = m1(1);
  k.Qxx = m1(1);
  k.Qxu = m1(0);
  k.Quu = m1(1);
  k.xbar = v1(0);
  k.lx = v1(0);
  k.lu = v1(0);
  return k;
}

TEST(BackwardStage, ScalarHandComputation) {
  const StageFactor f = backward_stage(scalar_stage(), m1(1), v1(0));
  // F = 2, H = 1, G = 2, so K = -1/2 and P = F - K G K = 3/2.
  EXPECT_DOUBLE_EQ(f.K(0, 0), -0.5);
  EXPECT_DOUBLE_EQ(f.P(0, 0), 1.5);
  EXPECT_EQ(f.k(0), 0.0);
  EXPECT_EQ(f.s(0), 0.0);
}

TEST(BackwardStage, UncontrollableStagePropagates) {
  std::mt19937_64 rng(31);
  StageKkt k;
  k.A = Matrix::Identity(2, 2) + random_matrix(rng, 2, 2, 0.3);
  k.B = Matrix::Zero(2, 1);
  k.Qxx = Matrix::Identity(2, 2);
  k.Qxu = Matrix::Zero(2, 1);
  k.Quu = m1(1);
  k.xbar = Vector::Zero(2);
  k.lx = Vector::Zero(2);
  k.lu = v1(0);
  const Matrix L = random_matrix(rng, 2, 2);
  const Matrix Pn = L * L.transpose();
  const StageFactor f = backward_stage(k, Pn, Vector::Zero(2));
  EXPECT_EQ(f.K, Matrix::Zero(1, 2));
  EXPECT_LE((f.P - (k.Qxx + k.A.transpose() * Pn * k.A)).norm(), 1e-14);
}

TEST(BackwardStage, RejectsNonconvexStage) {
  StageKkt k = scalar_stage();
  k.Quu = m1(-3);
  try {
    backward_stage(k, m1(1), v1(0), 4);
    FAIL() << "expected CurvatureError";
  } catch (const CurvatureError& e) {
    EXPECT_EQ(e.stage(), 4);
  }
}

StageKkt saddle_stage() {
  StageKkt k = scalar_stage();
  k.C = m1(1);
  k.D = m1(1);
  k.phibar = v1(0);
  k.constraint = 0;
  return k;
}

TEST(BackwardStageConstrained, ScalarSaddleHandInversion) {
  const StageFactor f = backward_stage_constrained(saddle_stage(), m1(1), v1(0));
  EXPECT_DOUBLE_EQ(f.K(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(f.M(0, 0), 1.0);
  // The constraint forces du = -dx, so the cost-to-go is dx^2.
  EXPECT_NEAR(f.P(0, 0), 2.0, 1e-15);
  EXPECT_EQ(f.k(0), 0.0);
  EXPECT_EQ(f.m(0), 0.0);
}

TEST(BackwardStageConstrained, NoConstraintRowsMatchesUnconstrained) {
  std::mt19937_64 rng(32);
  StageKkt k;
  k.A = Matrix::Identity(4, 4) + random_matrix(rng, 4, 4, 0.2);
  k.B = random_matrix(rng, 4, 2);
  k.Qxx = Matrix::Identity(4, 4);
  k.Qxu = random_matrix(rng, 4, 2, 0.1);
  k.Quu = Matrix::Identity(2, 2);
  k.xbar = random_vector(rng, 4);
  k.lx = random_vector(rng, 4);
  k.lu = random_vector(rng, 2);
  const Matrix Pn = Matrix::Identity(4, 4) * 2;
  const Vector sn = random_vector(rng, 4);
  const StageFactor a = backward_stage(k, Pn, sn);
  const StageFactor b = backward_stage_constrained(k, Pn, sn);
  EXPECT_EQ(a.P, b.P);
  EXPECT_EQ(a.s, b.s);
  EXPECT_EQ(a.K, b.K);
  EXPECT_EQ(a.k, b.k);
  k.constraint = 0;
  k.C = Matrix::Zero(0, 4);
  k.D = Matrix::Zero(0, 2);
  k.phibar = Vector::Zero(0);
  const StageFactor c = backward_stage_constrained(k, Pn, sn);
  EXPECT_EQ(a.P, c.P);
  EXPECT_EQ(a.s, c.s);
  EXPECT_EQ(a.K, c.K);
  EXPECT_EQ(a.k, c.k);
}

TEST(BackwardStageConstrained, RankDeficientRowsAreDegenerate) {
  StageKkt k = saddle_stage();
  k.D = m1(0);
  try {
    backward_stage_constrained(k, m1(1), v1(0), 7);
    FAIL() << "expected DegenerateConstraintError";
  } catch (const DegenerateConstraintError& e) {
    EXPECT_EQ(e.stage(), 7);
    EXPECT_EQ(e.constraint(), 0);
  }
}

TEST(BackwardStageConstrained, NegativeCurvatureOnNullSpace) {
  // Two controls, one constraint on the first: G restricted to the second
  // control is negative.
  StageKkt k;
  k.A = m1(1);
  k.B = Matrix::Zero(1, 2);
  k.Qxx = m1(1);
  k.Qxu = Matrix::Zero(1, 2);
  k.Quu = Vector(Vector::Ones(2) - 3 * Vector::Unit(2, 1)).asDiagonal();
  k.C = m1(0);
  k.D = (Matrix(1, 2) << 1, 0).finished();
  k.xbar = v1(0);
  k.lx = v1(0);
  k.lu = Vector::Zero(2);
  k.phibar = v1(0);
  k.constraint = 0;
  EXPECT_THROW(backward_stage_constrained(k, m1(1), v1(0), 2), CurvatureError);
  // Indefinite G that is positive on the null space is accepted.
  k.D = (Matrix(1, 2) << 0, 1).finished();
  EXPECT_NO_THROW(backward_stage_constrained(k, m1(1), v1(0), 2));
}

NewtonSystem with_zero_residuals(NewtonSystem sys) {
  for (auto& s : sys.stages) {
    s.xbar.setZero();
    s.lx.setZero();
    s.lu.setZero();
    s.phibar.setZero();
  }
  sys.lx_terminal.setZero();
  sys.x0_residual.setZero();
  return sys;
}

TEST(RiccatiSweep, ZeroResidualsGiveZeroDirection) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const OcpProblem prob = testing::random_problem(rng);
    const TransformedOcp ocp(prob);
    const NewtonSystem sys = with_zero_residuals(
        linearize(ocp, testing::random_iterate(prob, rng), HessianMode::exact));
    const RiccatiSolve rs = solve_newton_system(sys, ocp.constraints().size());
    for (const auto& f : rs.factor.stages) {
      EXPECT_EQ(f.s.norm(), 0.0);
      if (f.k.size()) EXPECT_EQ(f.k.norm(), 0.0);
      if (f.m.size()) EXPECT_EQ(f.m.norm(), 0.0);
    }
    EXPECT_EQ(rs.direction.norm(), 0.0);
  }
}

// Riccati and dense directions agree, and the Riccati direction solves the
// assembled Newton equations.
TEST(RiccatiSweep, MatchesDenseKktSolve) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 60; ++trial) {
    const OcpProblem prob = testing::random_problem(rng);
    const TransformedOcp ocp(prob);
    const NewtonSystem sys =
        linearize(ocp, testing::random_iterate(prob, rng), HessianMode::exact);
    const std::size_t nc = ocp.constraints().size();
    const Vector zr = testing::stack_direction(
        sys, solve_newton_system(sys, nc).direction);
    const Vector zd = testing::stack_direction(sys, solve_dense_kkt(sys, nc));
    EXPECT_LE((zr - zd).norm() / std::max(1.0, zd.norm()), 1e-9);
    const DenseKkt kkt = assemble_dense_kkt(sys);
    // Normwise backward error of the Riccati direction.
    const double scale = kkt.matrix.norm() * zr.norm() + kkt.rhs.norm();
    EXPECT_LE((kkt.matrix * zr - kkt.rhs).norm() / scale, 1e-12);
  }
}

TEST(RiccatiSweep, CostateRelationAndConstraintRows) {
  std::mt19937_64 rng(35);
  testing::RandomProblemOptions opt;
  opt.nonlinear = true;
  for (int trial = 0; trial < 30; ++trial) {
    const OcpProblem prob = testing::random_problem(rng, opt);
    const TransformedOcp ocp(prob);
    const NewtonSystem sys =
        linearize(ocp, testing::random_iterate(prob, rng), HessianMode::exact);
    const RiccatiSolve rs = solve_newton_system(sys, ocp.constraints().size());
    const auto& d = rs.direction;
    for (int i = 0; i <= sys.horizon(); ++i) {
      const auto& f = rs.factor.stages[i];
      EXPECT_LE((d.dlambda[i] - (f.P * d.dx[i] - f.s)).norm(), 1e-9);
    }
    for (int i = 0; i < sys.horizon(); ++i) {
      const auto& s = sys.stages[i];
      EXPECT_LE((s.A * d.dx[i] + s.B * d.du[i] - d.dx[i + 1] + s.xbar).norm(),
                1e-10);
      if (!s.constrained()) continue;
      EXPECT_LE((s.C * d.dx[i] + s.D * d.du[i] + s.phibar).norm(), 1e-10);
    }
    EXPECT_LE((d.dx[0] + sys.x0_residual).norm(), 1e-14);
  }
}

TEST(RiccatiSweep, ResolveReproducesForwardSweep) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    const OcpProblem prob = testing::random_problem(rng);
    const TransformedOcp ocp(prob);
    const NewtonSystem sys =
        linearize(ocp, testing::random_iterate(prob, rng), HessianMode::exact);
    const std::size_t nc = ocp.constraints().size();
    const RiccatiFactor f = backward_sweep(sys);
    const Vector a = testing::stack_direction(sys, forward_sweep(sys, f, nc));
    const Vector b = testing::stack_direction(sys, resolve(sys, f, nc));
    EXPECT_LE((a - b).norm(), 1e-12 * std::max(1.0, a.norm()));
  }
}

TEST(RiccatiSweep, RefinementDoesNotIncreaseResidual) {
  std::mt19937_64 rng(38);
  for (int trial = 0; trial < 40; ++trial) {
    const OcpProblem prob = testing::random_problem(rng);
    const TransformedOcp ocp(prob);
    const NewtonSystem sys =
        linearize(ocp, testing::random_iterate(prob, rng, 10.0), HessianMode::exact);
    const std::size_t nc = ocp.constraints().size();
    const DenseKkt kkt = assemble_dense_kkt(sys);
    auto residual = [&](bool refine) {
      const Vector z = testing::stack_direction(
          sys, solve_newton_system(sys, nc, {}, refine).direction);
      return (kkt.matrix * z - kkt.rhs).norm();
    };
    const double plain = residual(false);
    EXPECT_LE(residual(true), std::max(2.0 * plain, 1e-12 * kkt.rhs.norm()));
  }
}

TEST(RiccatiSweep, RegularizationRecoversNonconvexStage) {
  std::mt19937_64 rng(36);
  testing::RandomProblemOptions opt;
  opt.indefinite_cost = true;
  int regularized = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const OcpProblem prob = testing::random_problem(rng, opt);
    const TransformedOcp ocp(prob);
    const NewtonSystem sys =
        linearize(ocp, testing::random_iterate(prob, rng), HessianMode::exact);
    const std::size_t nc = ocp.constraints().size();
    Regularization off;
    off.enabled = false;
    try {
      solve_newton_system(sys, nc, off);
      continue;
    } catch (const CurvatureError&) {
    } catch (const DegenerateConstraintError&) {
      continue;
    }
    try {
      const RiccatiSolve rs = solve_newton_system(sys, nc);
      EXPECT_GT(rs.regularization, 0.0);
      EXPECT_LE(rs.regularization, Regularization{}.max);
      ++regularized;
    } catch (const CurvatureError&) {
      // Beyond the policy maximum: the error propagates.
    }
  }
  EXPECT_GT(regularized, 0);
}

TEST(SymmetricIndefiniteLdlt, ReportsInertia) {
  const Matrix A = Vector((Vector(3) << 1, -2, 3).finished()).asDiagonal();
  const SymmetricIndefiniteLdlt f(A);
  EXPECT_EQ(f.positive(), 2);
  EXPECT_EQ(f.negative(), 1);
  EXPECT_EQ(f.zero(), 0);
  const Matrix S = (Matrix(2, 2) << 2, 1, 1, 0).finished();
  const SymmetricIndefiniteLdlt g(S);
  EXPECT_EQ(g.positive(), 1);
  EXPECT_EQ(g.negative(), 1);
  Matrix B = Matrix::Identity(2, 2);
  g.solve_in_place(B);
  EXPECT_LE((B - (Matrix(2, 2) << 0, 1, 1, -2).finished()).norm(), 1e-15);
  const SymmetricIndefiniteLdlt z(Matrix::Zero(2, 2));
  EXPECT_EQ(z.zero(), 2);
}

TEST(SymmetricIndefiniteLdlt, SolvesRandomSaddleSystems) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 5, m = 2;
    const Matrix L = random_matrix(rng, n, n);
    Matrix K = Matrix::Zero(n + m, n + m);
    K.topLeftCorner(n, n) = L * L.transpose() + Matrix::Identity(n, n);
    const Matrix D = random_matrix(rng, m, n);
    K.bottomLeftCorner(m, n) = D;
    K.topRightCorner(n, m) = D.transpose();
    const SymmetricIndefiniteLdlt f(K);
    EXPECT_EQ(f.positive(), n);
    EXPECT_EQ(f.negative(), m);
    const Matrix rhs = random_matrix(rng, n + m, 3);
    Matrix X = rhs;
    f.solve_in_place(X);
    EXPECT_LE((K * X - rhs).norm(), 1e-10);
  }
}

TEST(NewtonStep, OneStepSolvesTheWaypointQp) {
  const OcpProblem prob =
      make_model("double_integrator", testing::double_integrator_waypoints());
  const TransformedOcp ocp(prob);
  Iterate it = Iterate::zeros(prob);
  const NewtonSystem sys = linearize(ocp, it, HessianMode::exact);
  const auto d = solve_newton_system(sys, ocp.constraints().size()).direction;
  for (std::size_t i = 0; i < it.x.size(); ++i) {
    it.x[i] += d.dx[i];
    it.lambda[i] += d.dlambda[i];
  }
  for (std::size_t i = 0; i < it.u.size(); ++i) it.u[i] += d.du[i];
  for (std::size_t c = 0; c < it.nu.size(); ++c) it.nu[c] += d.dnu[c];
  EXPECT_LE(fonc_residuals(ocp, it).kkt_error, 1e-10);
}

}  // namespace
}  // namespace psr
