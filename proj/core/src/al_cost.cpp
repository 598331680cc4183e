#include "psriccati/al_cost.hpp"

#include <utility>

namespace psr {

AugmentedLagrangianCost::AugmentedLagrangianCost(
    std::shared_ptr<const CostModel> base,
    std::vector<PureStateConstraint> constraints, std::vector<Vector> nu_hat,
    double penalty, HessianMode mode, int horizon)
    : base_(std::move(base)),
      constraints_(std::move(constraints)),
      nu_hat_(std::move(nu_hat)),
      penalty_(penalty),
      mode_(mode),
      horizon_(horizon),
      at_stage_(static_cast<std::size_t>(horizon) + 1, -1) {
  if (nu_hat_.size() != constraints_.size()) {
    throw DimensionError("AugmentedLagrangianCost: one estimate per constraint");
  }
  for (std::size_t j = 0; j < constraints_.size(); ++j) {
    at_stage_[static_cast<std::size_t>(constraints_[j].stage())] =
        static_cast<int>(j);
  }
}

double AugmentedLagrangianCost::penalty_value(int stage,
                                              const Vector& x) const {
  const int j = at_stage_[static_cast<std::size_t>(stage)];
  if (j < 0) return 0.0;
  const auto& c = constraints_[static_cast<std::size_t>(j)];
  const Vector phi = c.residual(x.head(x.size() / 2));
  return nu_hat_[static_cast<std::size_t>(j)].dot(phi) +
         0.5 * penalty_ * phi.squaredNorm();
}

Vector AugmentedLagrangianCost::penalty_gradient(int stage,
                                                 const Vector& x) const {
  const int j = at_stage_[static_cast<std::size_t>(stage)];
  if (j < 0) return Vector::Zero(x.size());
  const auto& c = constraints_[static_cast<std::size_t>(j)];
  const Vector phi = c.residual(x.head(x.size() / 2));
  return c.state_jacobian(x).transpose() *
         (nu_hat_[static_cast<std::size_t>(j)] + penalty_ * phi);
}

Matrix AugmentedLagrangianCost::penalty_hessian(int stage,
                                                const Vector& x) const {
  const int j = at_stage_[static_cast<std::size_t>(stage)];
  if (j < 0) return Matrix::Zero(x.size(), x.size());
  const auto& c = constraints_[static_cast<std::size_t>(j)];
  const Matrix J = c.state_jacobian(x);
  Matrix H = penalty_ * J.transpose() * J;
  if (mode_ == HessianMode::exact) {
    const Eigen::Index n = x.size() / 2;
    const Vector q = x.head(n);
    const Vector w = nu_hat_[static_cast<std::size_t>(j)] +
                     penalty_ * c.residual(q);
    Matrix Hq(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      Vector qp = q, qm = q;
      qp(k) += kCurvatureStep;
      qm(k) -= kCurvatureStep;
      Hq.col(k) = (c.jacobian(qp).transpose() * w -
                   c.jacobian(qm).transpose() * w) /
                  (2.0 * kCurvatureStep);
    }
    H.topLeftCorner(n, n) += 0.5 * (Hq + Hq.transpose());
  }
  return H;
}

double AugmentedLagrangianCost::stage(int i, const Vector& x,
                                      const Vector& u) const {
  return base_->stage(i, x, u) + penalty_value(i, x);
}

void AugmentedLagrangianCost::stage_gradient(int i, const Vector& x,
                                             const Vector& u, Vector& lx,
                                             Vector& lu) const {
  base_->stage_gradient(i, x, u, lx, lu);
  if (at_stage_[static_cast<std::size_t>(i)] >= 0) lx += penalty_gradient(i, x);
}

void AugmentedLagrangianCost::stage_hessian(int i, const Vector& x,
                                            const Vector& u, Matrix& lxx,
                                            Matrix& lxu, Matrix& luu) const {
  base_->stage_hessian(i, x, u, lxx, lxu, luu);
  if (at_stage_[static_cast<std::size_t>(i)] >= 0) lxx += penalty_hessian(i, x);
}

double AugmentedLagrangianCost::terminal(const Vector& x) const {
  return base_->terminal(x) + penalty_value(horizon_, x);
}

Vector AugmentedLagrangianCost::terminal_gradient(const Vector& x) const {
  return base_->terminal_gradient(x) + penalty_gradient(horizon_, x);
}

Matrix AugmentedLagrangianCost::terminal_hessian(const Vector& x) const {
  return base_->terminal_hessian(x) + penalty_hessian(horizon_, x);
}

}  // namespace psr
