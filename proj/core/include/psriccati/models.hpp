#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "psriccati/ocp.hpp"

namespace psr {

enum class ConstraintKind {
  /// phi(q) = q[coordinates] - targets
  waypoint,
  /// Nonlinear Cartesian end point of the pole (pendulum, cartpole):
  /// phi(q) = x_tip(q) - target
  endpoint,
};

struct ConstraintSpec {
  int stage = 2;
  ConstraintKind kind = ConstraintKind::waypoint;
  std::vector<int> coordinates{0};
  Vector targets = Vector::Zero(1);
};

/// Parameters of the analytic model zoo. Unused fields are ignored by models
/// that do not need them.
struct ModelParams {
  double dt = 0.1;
  int horizon = 20;
  /// Coordinate dimension of the double integrator (one control per axis).
  int dim = 1;

  double q_weight = 1.0;
  double v_weight = 0.1;
  double u_weight = 0.1;
  double terminal_weight = 1.0;
  /// Stacked initial state (q, v); empty means the origin.
  Vector x_init;

  double gravity = 9.81;
  double length = 1.0;
  double damping = 0.0;
  double cart_mass = 1.0;
  double pole_mass = 0.2;

  std::vector<ConstraintSpec> constraints;
};

/// Names accepted by make_model.
const std::vector<std::string>& model_names();

/// Builds one of {double_integrator, pendulum, cartpole} with explicit Euler
/// discretization at the given dt. Throws std::invalid_argument for an unknown
/// name and UnsupportedConstraintError for an invalid constraint schedule.
OcpProblem make_model(std::string_view name, const ModelParams& params);

StructuredDynamics double_integrator_dynamics(int dim, double dt);
StructuredDynamics pendulum_dynamics(double dt, double gravity, double length,
                                     double damping);
/// q = (cart position, pole angle), angle 0 hanging down.
StructuredDynamics cartpole_dynamics(double dt, double gravity, double length,
                                     double cart_mass, double pole_mass);

/// fq(x) = Fq x, fv(x, u) = Fv x + Bv u.
StructuredDynamics linear_second_order_dynamics(const Matrix& Fq,
                                                const Matrix& Fv,
                                                const Matrix& Bv);

}  // namespace psr
