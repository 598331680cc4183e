#pragma once

#include <memory>
#include <vector>

#include "psriccati/linearize.hpp"

namespace psr {

/// Base cost plus nu_hat' phi(q_k) + p/2 |phi(q_k)|^2 for every pure-state
/// constraint, attached to the stage (or terminal) cost at stage k.
/// In gauss_newton mode the Hessian keeps p phi_x' phi_x and drops the
/// constraint curvature; exact mode adds (nu_hat + p phi) . phi_xx by central
/// differences of phi_q.
class AugmentedLagrangianCost final : public CostModel {
 public:
  AugmentedLagrangianCost(std::shared_ptr<const CostModel> base,
                          std::vector<PureStateConstraint> constraints,
                          std::vector<Vector> nu_hat, double penalty,
                          HessianMode mode, int horizon);

  double stage(int i, const Vector& x, const Vector& u) const override;
  void stage_gradient(int i, const Vector& x, const Vector& u, Vector& lx,
                      Vector& lu) const override;
  void stage_hessian(int i, const Vector& x, const Vector& u, Matrix& lxx,
                     Matrix& lxu, Matrix& luu) const override;
  double terminal(const Vector& x) const override;
  Vector terminal_gradient(const Vector& x) const override;
  Matrix terminal_hessian(const Vector& x) const override;

 private:
  double penalty_value(int stage, const Vector& x) const;
  Vector penalty_gradient(int stage, const Vector& x) const;
  Matrix penalty_hessian(int stage, const Vector& x) const;

  std::shared_ptr<const CostModel> base_;
  std::vector<PureStateConstraint> constraints_;
  std::vector<Vector> nu_hat_;
  double penalty_;
  HessianMode mode_;
  int horizon_;
  std::vector<int> at_stage_;  // constraint index per stage, -1 if none
};

}  // namespace psr
