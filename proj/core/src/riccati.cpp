#include "psriccati/riccati.hpp"

#include <lapacke.h>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <chrono>
#include <cmath>
#include <string>

namespace psr {
namespace {

constexpr double kPivotTolerance = 1e-13;

void symmetrize(Matrix& P) { P = 0.5 * (P + P.transpose()).eval(); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// The Newton system with every right-hand side replaced by the residual of
// the linearized conditions at d; solving it gives a correction to d.
NewtonSystem linear_residual(const NewtonSystem& sys, const NewtonDirection& d) {
  NewtonSystem r = sys;
  const std::size_t N = sys.stages.size();
  r.x0_residual = sys.x0_residual + d.dx[0];
  for (std::size_t i = 0; i < N; ++i) {
    const auto& st = sys.stages[i];
    auto& rs = r.stages[i];
    rs.xbar = st.xbar + st.A * d.dx[i] + st.B * d.du[i] - d.dx[i + 1];
    rs.lx = st.lx + st.Qxx * d.dx[i] + st.Qxu * d.du[i] +
            st.A.transpose() * d.dlambda[i + 1] - d.dlambda[i];
    rs.lu = st.lu + st.Qxu.transpose() * d.dx[i] + st.Quu * d.du[i] +
            st.B.transpose() * d.dlambda[i + 1];
    if (st.constrained()) {
      const Vector& dnu = d.dnu[static_cast<std::size_t>(st.constraint)];
      rs.lx += st.C.transpose() * dnu;
      rs.lu += st.D.transpose() * dnu;
      rs.phibar = st.phibar + st.C * d.dx[i] + st.D * d.du[i];
    }
  }
  r.lx_terminal = sys.lx_terminal + sys.Qxx_terminal * d.dx[N] - d.dlambda[N];
  return r;
}

void add_to(NewtonDirection& d, const NewtonDirection& c) {
  for (std::size_t i = 0; i < d.dx.size(); ++i) d.dx[i] += c.dx[i];
  for (std::size_t i = 0; i < d.du.size(); ++i) d.du[i] += c.du[i];
  for (std::size_t i = 0; i < d.dlambda.size(); ++i) d.dlambda[i] += c.dlambda[i];
  for (std::size_t i = 0; i < d.dnu.size(); ++i) d.dnu[i] += c.dnu[i];
}

}  // namespace

double NewtonDirection::norm() const {
  double sq = 0.0;
  for (const auto* group : {&dx, &du, &dlambda, &dnu}) {
    for (const auto& v : *group) sq += v.squaredNorm();
  }
  return std::sqrt(sq);
}

SymmetricIndefiniteLdlt::SymmetricIndefiniteLdlt(const Matrix& A)
    : factor_(A), pivots_(static_cast<std::size_t>(A.rows())) {
  const auto n = static_cast<lapack_int>(A.rows());
  if (n == 0) return;
  const double scale = std::max(A.cwiseAbs().maxCoeff(), 1.0);
  LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, factor_.data(), n, pivots_.data());
  auto classify = [&](double d) {
    if (std::abs(d) <= kPivotTolerance * scale) {
      ++zero_;
    } else if (d > 0.0) {
      ++positive_;
    } else {
      ++negative_;
    }
  };
  for (lapack_int k = 0; k < n;) {
    if (pivots_[static_cast<std::size_t>(k)] > 0) {
      classify(factor_(k, k));
      ++k;
    } else {
      const double a = factor_(k, k);
      const double b = factor_(k + 1, k);
      const double c = factor_(k + 1, k + 1);
      const double mid = 0.5 * (a + c);
      const double rad = std::hypot(0.5 * (a - c), b);
      classify(mid + rad);
      classify(mid - rad);
      k += 2;
    }
  }
}

void SymmetricIndefiniteLdlt::solve_in_place(Matrix& B) const {
  if (zero_ > 0) throw FactorizationError("solve with a singular LDL' factor");
  const auto n = static_cast<lapack_int>(factor_.rows());
  if (n == 0 || B.cols() == 0) return;
  const lapack_int info = LAPACKE_dsytrs(
      LAPACK_COL_MAJOR, 'L', n, static_cast<lapack_int>(B.cols()),
      factor_.data(), n, pivots_.data(), B.data(), n);
  if (info != 0) throw FactorizationError("LDL' triangular solve failed");
}

namespace {

// k, m and s for the current right-hand sides, given the stage's matrices
// and factorization.
void stage_vectors(const StageKkt& kkt, const StageFactor& f,
                   const Matrix& P_next, const Vector& s_next, Vector& k,
                   Vector& m, Vector& s) {
  const Vector Px = P_next * kkt.xbar;
  const Vector ru = kkt.B.transpose() * (Px - s_next) + kkt.lu;
  s = kkt.A.transpose() * (s_next - Px) - kkt.lx;
  if (f.ldlt) {
    const Eigen::Index nu = kkt.B.cols();
    const Eigen::Index nc = kkt.C.rows();
    Matrix rhs(nu + nc, 1);
    rhs.topRows(nu) = ru;
    rhs.bottomRows(nc) = kkt.phibar;
    f.ldlt->solve_in_place(rhs);
    k = -rhs.topRows(nu);
    m = -rhs.bottomRows(nc);
    s -= kkt.C.transpose() * m;
  } else {
    k = -f.llt->solve(ru);
    m.resize(0);
  }
  s -= f.H * k;
}

}  // namespace

StageFactor backward_stage(const StageKkt& kkt, const Matrix& P_next,
                           const Vector& s_next, int stage) {
  const Matrix& A = kkt.A;
  const Matrix& B = kkt.B;
  const Matrix PB = P_next * B;
  const Matrix F = kkt.Qxx + A.transpose() * (P_next * A);
  const Matrix G = kkt.Quu + B.transpose() * PB;

  StageFactor out;
  out.H = kkt.Qxu + A.transpose() * PB;
  out.llt.emplace(G);
  if (out.llt->info() != Eigen::Success) {
    throw CurvatureError(stage, "Riccati stage " + std::to_string(stage) +
                                    ": G is not positive definite");
  }
  out.K = -out.llt->solve(out.H.transpose());
  out.P = F - out.K.transpose() * G * out.K;
  symmetrize(out.P);
  stage_vectors(kkt, out, P_next, s_next, out.k, out.m, out.s);
  return out;
}

StageFactor backward_stage_constrained(const StageKkt& kkt,
                                       const Matrix& P_next,
                                       const Vector& s_next, int stage) {
  if (kkt.C.rows() == 0) return backward_stage(kkt, P_next, s_next, stage);

  const Matrix& A = kkt.A;
  const Matrix& B = kkt.B;
  const Matrix& C = kkt.C;
  const Matrix& D = kkt.D;
  const Eigen::Index nu = B.cols();
  const Eigen::Index nc = C.rows();

  Eigen::ColPivHouseholderQR<Matrix> qr(D);
  qr.setThreshold(1e-12);
  if (qr.rank() < nc) {
    throw DegenerateConstraintError(
        kkt.constraint, stage,
        "constraint " + std::to_string(kkt.constraint) + " anchored at stage " +
            std::to_string(stage) + ": D has rank " +
            std::to_string(qr.rank()) + " < " + std::to_string(nc));
  }

  const Matrix PB = P_next * B;
  const Matrix F = kkt.Qxx + A.transpose() * (P_next * A);
  const Matrix G = kkt.Quu + B.transpose() * PB;

  StageFactor out;
  out.H = kkt.Qxu + A.transpose() * PB;
  Matrix S(nu + nc, nu + nc);
  S << G, D.transpose(), D, Matrix::Zero(nc, nc);
  out.ldlt.emplace(S);
  if (out.ldlt->zero() > 0) {
    throw FactorizationError("saddle block at stage " + std::to_string(stage) +
                             " is singular");
  }
  if (out.ldlt->positive() != nu || out.ldlt->negative() != nc) {
    throw CurvatureError(stage, "Riccati stage " + std::to_string(stage) +
                                    ": G is not positive definite on the "
                                    "null space of D");
  }

  const Eigen::Index nx = A.rows();
  Matrix KM(nu + nc, nx);
  KM.topRows(nu) = out.H.transpose();
  KM.bottomRows(nc) = C;
  out.ldlt->solve_in_place(KM);
  KM = -KM;
  out.K = KM.topRows(nu);
  out.M = KM.bottomRows(nc);
  out.P = F - KM.transpose() * S * KM;
  symmetrize(out.P);
  stage_vectors(kkt, out, P_next, s_next, out.k, out.m, out.s);
  return out;
}

RiccatiFactor backward_sweep(const NewtonSystem& sys, double quu_shift) {
  const int N = sys.horizon();
  RiccatiFactor f;
  f.stages.resize(static_cast<std::size_t>(N) + 1);
  auto& terminal = f.stages[static_cast<std::size_t>(N)];
  terminal.P = sys.Qxx_terminal;
  terminal.s = -sys.lx_terminal;
  for (int i = N - 1; i >= 0; --i) {
    const auto s = static_cast<std::size_t>(i);
    const StageKkt* kkt = &sys.stages[s];
    StageKkt shifted;
    if (quu_shift > 0.0) {
      shifted = *kkt;
      shifted.Quu.diagonal().array() += quu_shift;
      kkt = &shifted;
    }
    const auto& next = f.stages[s + 1];
    f.stages[s] = kkt->constrained()
                      ? backward_stage_constrained(*kkt, next.P, next.s, i)
                      : backward_stage(*kkt, next.P, next.s, i);
  }
  return f;
}

namespace {

NewtonDirection forward_impl(const NewtonSystem& sys,
                             const RiccatiFactor& factor,
                             const std::vector<Vector>& ks,
                             const std::vector<Vector>& ms,
                             std::size_t n_constraints) {
  const auto N = static_cast<std::size_t>(sys.horizon());
  NewtonDirection d;
  d.dx.resize(N + 1);
  d.du.resize(N);
  d.dlambda.resize(N + 1);
  d.dnu.resize(n_constraints);
  d.dx[0] = -sys.x0_residual;
  for (std::size_t i = 0; i < N; ++i) {
    const auto& st = sys.stages[i];
    const auto& fs = factor.stages[i];
    d.du[i] = fs.K * d.dx[i] + ks[i];
    if (st.constrained()) {
      d.dnu[static_cast<std::size_t>(st.constraint)] = fs.M * d.dx[i] + ms[i];
    }
    d.dx[i + 1] = st.A * d.dx[i] + st.B * d.du[i] + st.xbar;
  }
  // Costates from the x-stationarity rows rather than P dx - s. The two agree
  // in exact arithmetic, but P dx cancels badly once P and dx are large.
  d.dlambda[N] = sys.Qxx_terminal * d.dx[N] + sys.lx_terminal;
  for (std::size_t i = N; i-- > 0;) {
    const auto& st = sys.stages[i];
    d.dlambda[i] = st.Qxx * d.dx[i] + st.Qxu * d.du[i] +
                   st.A.transpose() * d.dlambda[i + 1] + st.lx;
    if (st.constrained()) {
      d.dlambda[i] +=
          st.C.transpose() * d.dnu[static_cast<std::size_t>(st.constraint)];
    }
  }
  return d;
}

}  // namespace

NewtonDirection forward_sweep(const NewtonSystem& sys,
                              const RiccatiFactor& factor,
                              std::size_t n_constraints) {
  const std::size_t N = sys.stages.size();
  std::vector<Vector> ks(N), ms(N);
  for (std::size_t i = 0; i < N; ++i) {
    ks[i] = factor.stages[i].k;
    ms[i] = factor.stages[i].m;
  }
  return forward_impl(sys, factor, ks, ms, n_constraints);
}

NewtonDirection resolve(const NewtonSystem& rhs, const RiccatiFactor& factor,
                        std::size_t n_constraints) {
  const std::size_t N = rhs.stages.size();
  std::vector<Vector> ks(N), ms(N);
  Vector s = -rhs.lx_terminal;
  for (std::size_t i = N; i-- > 0;) {
    Vector s_here;
    stage_vectors(rhs.stages[i], factor.stages[i], factor.stages[i + 1].P, s,
                  ks[i], ms[i], s_here);
    s = std::move(s_here);
  }
  return forward_impl(rhs, factor, ks, ms, n_constraints);
}

RiccatiSolve solve_newton_system(const NewtonSystem& sys,
                                 std::size_t n_constraints,
                                 const Regularization& reg, bool refine) {
  RiccatiSolve out;
  double shift = 0.0;
  for (;;) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      out.factor = backward_sweep(sys, shift);
      out.backward_seconds = seconds_since(t0);
      break;
    } catch (const CurvatureError&) {
      if (!reg.enabled) throw;
      shift = shift == 0.0 ? reg.initial : shift * reg.growth;
      if (shift > reg.max) throw;
    }
  }
  out.regularization = shift;
  const auto t1 = std::chrono::steady_clock::now();
  out.direction = forward_sweep(sys, out.factor, n_constraints);
  if (refine && shift == 0.0) {
    const NewtonSystem r = linear_residual(sys, out.direction);
    add_to(out.direction, resolve(r, out.factor, n_constraints));
  }
  out.forward_seconds = seconds_since(t1);
  return out;
}

}  // namespace psr
