#pragma once

#include "psriccati/riccati.hpp"

namespace psr {

/// The Newton system assembled as one symmetric matrix over every primal and
/// dual variable, in KktLayout order. Solving `matrix * z = rhs` yields the
/// same direction as the Riccati recursion; no structure is exploited.
struct DenseKkt {
  KktLayout layout;
  Matrix matrix;
  Vector rhs;
};

DenseKkt assemble_dense_kkt(const NewtonSystem& sys);

/// Splits a stacked solution vector into per-stage direction blocks.
NewtonDirection unpack_direction(const NewtonSystem& sys,
                                 const KktLayout& layout, const Vector& z,
                                 std::size_t n_constraints);

/// Solves the dense system with partial-pivoting LU. Throws FactorizationError
/// on a numerically singular matrix.
NewtonDirection solve_dense_kkt(const NewtonSystem& sys,
                                std::size_t n_constraints);

/// Indices of the primal (x, u) and dual (lambda, nu) entries in the layout.
struct PrimalDualSplit {
  std::vector<Eigen::Index> primal;
  std::vector<Eigen::Index> dual;
};
PrimalDualSplit split_primal_dual(const NewtonSystem& sys,
                                  const KktLayout& layout);

}  // namespace psr
