#include "psriccati/models.hpp"

#include <unsupported/Eigen/AutoDiff>

#include <cmath>
#include <memory>
#include <stdexcept>

namespace psr {
namespace {

using AdScalar = Eigen::AutoDiffScalar<Vector>;
using AdVector = Eigen::Matrix<AdScalar, Eigen::Dynamic, 1>;

// Velocity increment of the cartpole written once over a generic scalar so the
// Jacobians come from forward-mode differentiation.
template <typename T>
Eigen::Matrix<T, Eigen::Dynamic, 1> cartpole_velocity(
    const Eigen::Matrix<T, Eigen::Dynamic, 1>& x,
    const Eigen::Matrix<T, Eigen::Dynamic, 1>& u, double dt, double g, double l,
    double mc, double mp) {
  using std::cos;
  using std::sin;
  const T& th = x(1);
  const T& thd = x(3);
  const T s = sin(th);
  const T c = cos(th);
  const T denom = mc + mp * s * s;
  Eigen::Matrix<T, Eigen::Dynamic, 1> acc(2);
  acc(0) = (u(0) + mp * s * (l * thd * thd + g * c)) / denom;
  acc(1) = (-u(0) * c - mp * l * thd * thd * c * s - (mc + mp) * g * s) /
           (l * denom);
  return acc * dt;
}

Matrix selection_rows(int n, int from) {
  Matrix S = Matrix::Zero(n, 2 * n);
  S.block(0, from, n, n).setIdentity();
  return S;
}

PureStateConstraint endpoint_constraint(std::string_view model,
                                        const ConstraintSpec& spec,
                                        double length) {
  if (spec.targets.size() != 1) {
    throw std::invalid_argument("endpoint constraint takes one target");
  }
  const double target = spec.targets(0);
  if (model == "pendulum") {
    return PureStateConstraint(
        spec.stage, 1,
        [=](const Vector& q) {
          return Vector::Constant(1, length * std::sin(q(0)) - target);
        },
        [=](const Vector& q) {
          return Matrix::Constant(1, 1, length * std::cos(q(0)));
        });
  }
  if (model == "cartpole") {
    return PureStateConstraint(
        spec.stage, 1,
        [=](const Vector& q) {
          return Vector::Constant(1, q(0) + length * std::sin(q(1)) - target);
        },
        [=](const Vector& q) {
          Matrix J(1, 2);
          J << 1.0, length * std::cos(q(1));
          return J;
        });
  }
  throw std::invalid_argument("endpoint constraints are not defined for " +
                              std::string(model));
}

}  // namespace

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"double_integrator", "pendulum",
                                              "cartpole"};
  return names;
}

StructuredDynamics double_integrator_dynamics(int dim, double dt) {
  const Matrix Fq = dt * selection_rows(dim, dim);
  const Matrix Fv = Matrix::Zero(dim, 2 * dim);
  const Matrix Bv = dt * Matrix::Identity(dim, dim);
  return linear_second_order_dynamics(Fq, Fv, Bv);
}

StructuredDynamics linear_second_order_dynamics(const Matrix& Fq,
                                                const Matrix& Fv,
                                                const Matrix& Bv) {
  const auto n = static_cast<int>(Fq.rows());
  const auto nu = static_cast<int>(Bv.cols());
  if (Fq.cols() != 2 * n || Fv.rows() != n || Fv.cols() != 2 * n ||
      Bv.rows() != n) {
    throw DimensionError("linear dynamics: inconsistent block shapes");
  }
  return StructuredDynamics(
      n, nu, [Fq](const Vector& x) -> Vector { return Fq * x; },
      [Fq](const Vector&) -> Matrix { return Fq; },
      [Fv, Bv](const Vector& x, const Vector& u) -> Vector {
        return Fv * x + Bv * u;
      },
      [Fv, Bv](const Vector&, const Vector&, Matrix& dx, Matrix& du) {
        dx = Fv;
        du = Bv;
      });
}

StructuredDynamics pendulum_dynamics(double dt, double gravity, double length,
                                     double damping) {
  const double w2 = gravity / length;
  return StructuredDynamics(
      1, 1, [dt](const Vector& x) -> Vector { return dt * x.tail(1); },
      [dt](const Vector&) -> Matrix {
        Matrix J(1, 2);
        J << 0.0, dt;
        return J;
      },
      [=](const Vector& x, const Vector& u) -> Vector {
        return Vector::Constant(
            1, dt * (u(0) - w2 * std::sin(x(0)) - damping * x(1)));
      },
      [=](const Vector& x, const Vector&, Matrix& dx, Matrix& du) {
        dx(0, 0) = -dt * w2 * std::cos(x(0));
        dx(0, 1) = -dt * damping;
        du(0, 0) = dt;
      });
}

StructuredDynamics cartpole_dynamics(double dt, double gravity, double length,
                                     double cart_mass, double pole_mass) {
  return StructuredDynamics(
      2, 1, [dt](const Vector& x) -> Vector { return dt * x.tail(2); },
      [dt](const Vector&) -> Matrix { return dt * selection_rows(2, 2); },
      [=](const Vector& x, const Vector& u) -> Vector {
        return cartpole_velocity<double>(x, u, dt, gravity, length, cart_mass,
                                         pole_mass);
      },
      [=](const Vector& x, const Vector& u, Matrix& dx, Matrix& du) {
        const Eigen::Index nv = x.size() + u.size();
        AdVector xa(x.size());
        AdVector ua(u.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          xa(i) = AdScalar(x(i), nv, i);
        }
        for (Eigen::Index i = 0; i < u.size(); ++i) {
          ua(i) = AdScalar(u(i), nv, x.size() + i);
        }
        const AdVector acc = cartpole_velocity<AdScalar>(
            xa, ua, dt, gravity, length, cart_mass, pole_mass);
        for (Eigen::Index r = 0; r < acc.size(); ++r) {
          const Vector& d = acc(r).derivatives();
          if (d.size() == 0) {
            dx.row(r).setZero();
            du.row(r).setZero();
          } else {
            dx.row(r) = d.head(x.size()).transpose();
            du.row(r) = d.tail(u.size()).transpose();
          }
        }
      });
}

OcpProblem make_model(std::string_view name, const ModelParams& params) {
  if (params.dt <= 0.0) throw std::invalid_argument("dt must be positive");
  if (params.horizon < 1) throw std::invalid_argument("N must be >= 1");

  StructuredDynamics dyn = [&]() {
    if (name == "double_integrator") {
      if (params.dim < 1) throw std::invalid_argument("dim must be >= 1");
      return double_integrator_dynamics(params.dim, params.dt);
    }
    if (name == "pendulum") {
      return pendulum_dynamics(params.dt, params.gravity, params.length,
                               params.damping);
    }
    if (name == "cartpole") {
      return cartpole_dynamics(params.dt, params.gravity, params.length,
                               params.cart_mass, params.pole_mass);
    }
    throw std::invalid_argument("unknown model '" + std::string(name) + "'");
  }();

  const int n = dyn.n();
  const int nu = dyn.nu();
  Vector q_diag(2 * n);
  q_diag << Vector::Constant(n, params.q_weight),
      Vector::Constant(n, params.v_weight);
  auto cost = std::make_shared<QuadraticCost>(QuadraticCost::diagonal(
      q_diag, Vector::Constant(nu, params.u_weight),
      Vector::Constant(2 * n, params.terminal_weight)));

  std::vector<PureStateConstraint> constraints;
  for (const auto& spec : params.constraints) {
    if (spec.kind == ConstraintKind::waypoint) {
      constraints.push_back(PureStateConstraint::waypoint(
          spec.stage, n, spec.coordinates, spec.targets));
    } else {
      if (spec.stage < 2) {
        // Reuse the constraint type's own stage validation message.
        PureStateConstraint::waypoint(spec.stage, n, {0}, Vector::Zero(1));
      }
      constraints.push_back(endpoint_constraint(name, spec, params.length));
    }
  }

  StateVector x0 = params.x_init.size() == 0
                       ? StateVector(Vector::Zero(n), Vector::Zero(n))
                       : StateVector::from_stacked(params.x_init);
  return OcpProblem(std::move(dyn), std::move(cost), std::move(constraints),
                    params.horizon, std::move(x0));
}

}  // namespace psr
