#include "psriccati/dense_kkt.hpp"

#include <Eigen/LU>
#include <limits>

namespace psr {

DenseKkt assemble_dense_kkt(const NewtonSystem& sys) {
  DenseKkt kkt;
  kkt.layout = KktLayout::of(sys);
  const auto& l = kkt.layout;
  const Eigen::Index nx = sys.Qxx_terminal.rows();
  Matrix& K = kkt.matrix;
  K.setZero(l.size, l.size);
  const Matrix I = Matrix::Identity(nx, nx);

  auto put = [&K](Eigen::Index r, Eigen::Index c, const Matrix& block) {
    K.block(r, c, block.rows(), block.cols()) = block;
    if (r != c) K.block(c, r, block.cols(), block.rows()) = block.transpose();
  };

  put(l.lambda[0], l.x[0], -I);
  const int N = sys.horizon();
  for (int i = 0; i < N; ++i) {
    const auto s = static_cast<std::size_t>(i);
    const auto& st = sys.stages[s];
    put(l.x[s], l.x[s], st.Qxx);
    put(l.x[s], l.u[s], st.Qxu);
    put(l.u[s], l.u[s], st.Quu);
    put(l.lambda[s + 1], l.x[s], st.A);
    put(l.lambda[s + 1], l.u[s], st.B);
    put(l.lambda[s + 1], l.x[s + 1], -I);
    if (st.constrained()) {
      put(l.nu[s], l.x[s], st.C);
      put(l.nu[s], l.u[s], st.D);
    }
  }
  put(l.x[static_cast<std::size_t>(N)], l.x[static_cast<std::size_t>(N)],
      sys.Qxx_terminal);
  kkt.rhs = -stack_residuals(sys);
  return kkt;
}

NewtonDirection unpack_direction(const NewtonSystem& sys,
                                 const KktLayout& l, const Vector& z,
                                 std::size_t n_constraints) {
  const auto N = static_cast<std::size_t>(sys.horizon());
  const Eigen::Index nx = sys.Qxx_terminal.rows();
  NewtonDirection d;
  d.dx.resize(N + 1);
  d.du.resize(N);
  d.dlambda.resize(N + 1);
  d.dnu.resize(n_constraints);
  for (std::size_t i = 0; i <= N; ++i) {
    d.dlambda[i] = z.segment(l.lambda[i], nx);
    d.dx[i] = z.segment(l.x[i], nx);
  }
  for (std::size_t i = 0; i < N; ++i) {
    const auto& st = sys.stages[i];
    d.du[i] = z.segment(l.u[i], st.B.cols());
    if (st.constrained()) {
      d.dnu[static_cast<std::size_t>(st.constraint)] =
          z.segment(l.nu[i], l.nu_size[i]);
    }
  }
  return d;
}

NewtonDirection solve_dense_kkt(const NewtonSystem& sys,
                                std::size_t n_constraints) {
  const DenseKkt kkt = assemble_dense_kkt(sys);
  Eigen::PartialPivLU<Matrix> lu(kkt.matrix);
  if (!(lu.rcond() > std::numeric_limits<double>::epsilon())) {
    throw FactorizationError("dense KKT matrix is numerically singular");
  }
  const Vector z = lu.solve(kkt.rhs);
  if (!z.allFinite()) {
    throw FactorizationError("dense KKT solve produced non-finite values");
  }
  return unpack_direction(sys, kkt.layout, z, n_constraints);
}

PrimalDualSplit split_primal_dual(const NewtonSystem& sys,
                                  const KktLayout& l) {
  PrimalDualSplit out;
  const auto N = static_cast<std::size_t>(sys.horizon());
  const Eigen::Index nx = sys.Qxx_terminal.rows();
  auto range = [](std::vector<Eigen::Index>& dst, Eigen::Index from,
                  Eigen::Index len) {
    for (Eigen::Index j = 0; j < len; ++j) dst.push_back(from + j);
  };
  for (std::size_t i = 0; i <= N; ++i) {
    range(out.dual, l.lambda[i], nx);
    range(out.primal, l.x[i], nx);
    if (i < N) {
      range(out.primal, l.u[i], sys.stages[i].B.cols());
      if (sys.stages[i].constrained()) range(out.dual, l.nu[i], l.nu_size[i]);
    }
  }
  return out;
}

}  // namespace psr
