#include "psriccati/ocp.hpp"

#include <utility>

namespace psr {

StateVector::StateVector(Vector q, Vector v) : q_(std::move(q)), v_(std::move(v)) {
  if (q_.size() != v_.size()) {
    throw DimensionError("StateVector: q and v must have equal length");
  }
}

StateVector StateVector::from_stacked(const Vector& x) {
  if (x.size() % 2 != 0) {
    throw DimensionError("StateVector: stacked state must have even length");
  }
  const Eigen::Index n = x.size() / 2;
  return StateVector(x.head(n), x.tail(n));
}

Vector StateVector::stacked() const {
  Vector x(nx());
  x << q_, v_;
  return x;
}

StructuredDynamics::StructuredDynamics(int n, int nu, CoordinateMap fq,
                                       CoordinateJacobian fq_x, VelocityMap fv,
                                       VelocityJacobian fv_xu)
    : n_(n),
      nu_(nu),
      fq_(std::move(fq)),
      fq_x_(std::move(fq_x)),
      fv_(std::move(fv)),
      fv_xu_(std::move(fv_xu)) {
  if (n <= 0 || nu <= 0) {
    throw DimensionError("StructuredDynamics: n and nu must be positive");
  }
  if (nu > n) {
    throw DimensionError("StructuredDynamics: nu must not exceed n");
  }
  if (!fq_ || !fq_x_ || !fv_ || !fv_xu_) {
    throw std::invalid_argument("StructuredDynamics: missing callback");
  }
}

void StructuredDynamics::check(const Vector& x, const Vector& u) const {
  require_size(x, nx(), "dynamics state");
  require_size(u, nu_, "dynamics control");
}

Vector StructuredDynamics::coordinate_increment(const Vector& x) const {
  require_size(x, nx(), "dynamics state");
  return fq_(x);
}

Matrix StructuredDynamics::coordinate_jacobian(const Vector& x) const {
  require_size(x, nx(), "dynamics state");
  return fq_x_(x);
}

Vector StructuredDynamics::velocity_increment(const Vector& x,
                                              const Vector& u) const {
  check(x, u);
  return fv_(x, u);
}

void StructuredDynamics::velocity_jacobians(const Vector& x, const Vector& u,
                                            Matrix& dfv_dx,
                                            Matrix& dfv_du) const {
  check(x, u);
  dfv_dx.setZero(n_, nx());
  dfv_du.setZero(n_, nu_);
  fv_xu_(x, u, dfv_dx, dfv_du);
}

Vector StructuredDynamics::increment(const Vector& x, const Vector& u) const {
  check(x, u);
  Vector f(nx());
  f.head(n_) = fq_(x);
  f.tail(n_) = fv_(x, u);
  return f;
}

void StructuredDynamics::increment_jacobians(const Vector& x, const Vector& u,
                                             Matrix& fx, Matrix& fu) const {
  check(x, u);
  fx.resize(nx(), nx());
  fu.setZero(nx(), nu_);
  fx.topRows(n_) = fq_x_(x);
  Matrix dv_dx = Matrix::Zero(n_, nx());
  Matrix dv_du = Matrix::Zero(n_, nu_);
  fv_xu_(x, u, dv_dx, dv_du);
  fx.bottomRows(n_) = dv_dx;
  fu.bottomRows(n_) = dv_du;
}

Vector StructuredDynamics::next(const Vector& x, const Vector& u) const {
  return x + increment(x, u);
}

StateVector step_dynamics(const StructuredDynamics& dyn, const StateVector& x,
                          const Vector& u) {
  if (x.n() != dyn.n()) {
    throw DimensionError("step_dynamics: state dimension mismatch");
  }
  return StateVector::from_stacked(dyn.next(x.stacked(), u));
}

PureStateConstraint::PureStateConstraint(int stage, int nc, Residual phi,
                                         Jacobian phi_q)
    : stage_(stage), nc_(nc), phi_(std::move(phi)), phi_q_(std::move(phi_q)) {
  if (stage < 2) {
    throw UnsupportedConstraintError(
        "pure-state constraint stage must satisfy k >= 2 (got k = " +
        std::to_string(stage) + ")");
  }
  if (nc <= 0) {
    throw DimensionError("pure-state constraint dimension must be positive");
  }
  if (!phi_ || !phi_q_) {
    throw std::invalid_argument("PureStateConstraint: missing callback");
  }
}

PureStateConstraint PureStateConstraint::waypoint(
    int stage, int n, const std::vector<int>& indices, const Vector& targets) {
  if (static_cast<Eigen::Index>(indices.size()) != targets.size()) {
    throw DimensionError("waypoint: one target per selected coordinate");
  }
  Matrix S = Matrix::Zero(static_cast<Eigen::Index>(indices.size()), n);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] < 0 || indices[r] >= n) {
      throw DimensionError("waypoint: coordinate index out of range");
    }
    S(static_cast<Eigen::Index>(r), indices[r]) = 1.0;
  }
  return PureStateConstraint(
      stage, static_cast<int>(indices.size()),
      [S, targets](const Vector& q) -> Vector { return S * q - targets; },
      [S](const Vector&) -> Matrix { return S; });
}

Vector PureStateConstraint::residual(const Vector& q) const {
  Vector r = phi_(q);
  require_size(r, nc_, "constraint residual");
  return r;
}

Matrix PureStateConstraint::jacobian(const Vector& q) const {
  Matrix J = phi_q_(q);
  if (J.rows() != nc_ || J.cols() != q.size()) {
    throw DimensionError("constraint Jacobian has wrong shape");
  }
  return J;
}

Matrix PureStateConstraint::state_jacobian(const Vector& x) const {
  const Eigen::Index n = x.size() / 2;
  Matrix J = Matrix::Zero(nc_, x.size());
  J.leftCols(n) = jacobian(x.head(n));
  return J;
}

void require_symmetric(const Matrix& M, double tol, const char* what) {
  if (M.rows() != M.cols() ||
      (M.size() > 0 && (M - M.transpose()).cwiseAbs().maxCoeff() > tol)) {
    throw DimensionError(std::string(what) + " must be symmetric");
  }
}

QuadraticCost::QuadraticCost(Matrix Q, Matrix S, Matrix R, Matrix Qf,
                             Vector x_ref, Vector u_ref)
    : Q_(std::move(Q)),
      S_(std::move(S)),
      R_(std::move(R)),
      Qf_(std::move(Qf)),
      x_ref_(std::move(x_ref)),
      u_ref_(std::move(u_ref)) {
  require_symmetric(Q_, 1e-12, "stage state weight");
  require_symmetric(R_, 1e-12, "stage control weight");
  require_symmetric(Qf_, 1e-12, "terminal weight");
  const Eigen::Index nx = Q_.rows();
  const Eigen::Index nu = R_.rows();
  if (S_.rows() != nx || S_.cols() != nu || Qf_.rows() != nx ||
      x_ref_.size() != nx || u_ref_.size() != nu) {
    throw DimensionError("QuadraticCost: inconsistent weight shapes");
  }
}

QuadraticCost QuadraticCost::diagonal(const Vector& q_diag,
                                      const Vector& r_diag,
                                      const Vector& qf_diag) {
  return QuadraticCost(q_diag.asDiagonal().toDenseMatrix(),
                       Matrix::Zero(q_diag.size(), r_diag.size()),
                       r_diag.asDiagonal().toDenseMatrix(),
                       qf_diag.asDiagonal().toDenseMatrix(),
                       Vector::Zero(q_diag.size()), Vector::Zero(r_diag.size()));
}

double QuadraticCost::stage(int, const Vector& x, const Vector& u) const {
  const Vector dx = x - x_ref_;
  const Vector du = u - u_ref_;
  return 0.5 * dx.dot(Q_ * dx) + dx.dot(S_ * du) + 0.5 * du.dot(R_ * du);
}

void QuadraticCost::stage_gradient(int, const Vector& x, const Vector& u,
                                   Vector& lx, Vector& lu) const {
  const Vector dx = x - x_ref_;
  const Vector du = u - u_ref_;
  lx = Q_ * dx + S_ * du;
  lu = S_.transpose() * dx + R_ * du;
}

void QuadraticCost::stage_hessian(int, const Vector&, const Vector&,
                                  Matrix& lxx, Matrix& lxu,
                                  Matrix& luu) const {
  lxx = Q_;
  lxu = S_;
  luu = R_;
}

double QuadraticCost::terminal(const Vector& x) const {
  const Vector dx = x - x_ref_;
  return 0.5 * dx.dot(Qf_ * dx);
}

Vector QuadraticCost::terminal_gradient(const Vector& x) const {
  return Qf_ * (x - x_ref_);
}

Matrix QuadraticCost::terminal_hessian(const Vector&) const { return Qf_; }

OcpProblem::OcpProblem(StructuredDynamics dynamics,
                       std::shared_ptr<const CostModel> cost,
                       std::vector<PureStateConstraint> constraints,
                       int horizon, StateVector x_init)
    : dynamics_(std::move(dynamics)),
      cost_(std::move(cost)),
      constraints_(std::move(constraints)),
      horizon_(horizon),
      x_init_(std::move(x_init)) {
  if (!cost_) throw std::invalid_argument("OcpProblem: cost is null");
  if (horizon_ < 1) throw DimensionError("OcpProblem: horizon must be >= 1");
  if (x_init_.n() != dynamics_.n()) {
    throw DimensionError("OcpProblem: initial state dimension mismatch");
  }
  int previous = -1;
  for (const auto& c : constraints_) {
    const int k = c.stage();
    if (k < 2 || k > horizon_) {
      throw UnsupportedConstraintError(
          "constraint stage k = " + std::to_string(k) +
          " outside the admissible range 2 <= k <= N = " +
          std::to_string(horizon_));
    }
    if (c.nc() > dynamics_.n()) {
      throw UnsupportedConstraintError(
          "constraint dimension exceeds the coordinate dimension n");
    }
    if (previous >= 0) {
      if (k <= previous) {
        throw UnsupportedConstraintError(
            "constraint stages must be strictly increasing");
      }
      if (k - previous < 2) {
        throw UnsupportedConstraintError(
            "constraint stages " + std::to_string(previous) + " and " +
            std::to_string(k) + " are closer than the minimum gap of 2");
      }
    }
    previous = k;
  }
}

OcpProblem OcpProblem::with(std::shared_ptr<const CostModel> cost,
                            std::vector<PureStateConstraint> constraints) const {
  return OcpProblem(dynamics_, std::move(cost), std::move(constraints),
                    horizon_, x_init_);
}

Iterate Iterate::zeros(const OcpProblem& problem) {
  const int N = problem.horizon();
  Iterate it;
  it.x.assign(N + 1, Vector::Zero(problem.nx()));
  it.u.assign(N, Vector::Zero(problem.nu()));
  it.lambda.assign(N + 1, Vector::Zero(problem.nx()));
  for (const auto& c : problem.constraints()) {
    it.nu.push_back(Vector::Zero(c.nc()));
  }
  return it;
}

void Iterate::check(const OcpProblem& problem) const {
  const auto N = static_cast<std::size_t>(problem.horizon());
  if (x.size() != N + 1 || u.size() != N || lambda.size() != N + 1 ||
      nu.size() != problem.constraints().size()) {
    throw DimensionError("Iterate: trajectory lengths do not match horizon");
  }
  for (const auto& xi : x) require_size(xi, problem.nx(), "iterate state");
  for (const auto& li : lambda) require_size(li, problem.nx(), "iterate costate");
  for (const auto& ui : u) require_size(ui, problem.nu(), "iterate control");
  for (std::size_t j = 0; j < nu.size(); ++j) {
    require_size(nu[j], problem.constraints()[j].nc(), "iterate multiplier");
  }
}

std::vector<Vector> rollout(const OcpProblem& problem,
                            const std::vector<Vector>& controls) {
  std::vector<Vector> xs;
  xs.reserve(controls.size() + 1);
  xs.push_back(problem.x_init().stacked());
  for (const auto& u : controls) {
    xs.push_back(problem.dynamics().next(xs.back(), u));
  }
  return xs;
}

}  // namespace psr
