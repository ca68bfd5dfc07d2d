#include "icenav/ship.hpp"

#include <cmath>

#include "icenav/errors.hpp"

namespace icenav {

namespace {

Eigen::Matrix2d rot2(double psi) {
  Eigen::Matrix2d R;
  R << std::cos(psi), -std::sin(psi), std::sin(psi), std::cos(psi);
  return R;
}

}  // namespace

VesselModel make_default_vessel(double mass, const ShipFootprint& footprint) {
  VesselModel m;
  m.mass = mass;
  m.footprint = footprint;
  const double L = footprint.length, W = footprint.width;
  const double iz = mass * (L * L + W * W) / 12.0;
  m.A = Eigen::Vector3d(-1.0 / 50, -1.0 / 50, -1.0 / 20).asDiagonal();
  m.B = Eigen::Vector3d(1.0 / mass, 1.0 / mass, 1.0 / iz).asDiagonal();

  // Two stern mains at +-4 m lateral offset, then fore and aft tunnel pairs.
  const double main_y[2] = {4.0, -4.0};
  const double tunnel_x[4] = {0.40 * L, 0.32 * L, -0.32 * L, -0.40 * L};
  for (int i = 0; i < 2; ++i) {
    m.T(0, i) = 1.0;
    m.T(2, i) = -main_y[i];
    m.limits(i) = 799e3;
  }
  for (int i = 0; i < 4; ++i) {
    m.T(1, 2 + i) = 1.0;
    m.T(2, 2 + i) = tunnel_x[i];
    m.limits(2 + i) = 200e3;
  }
  return m;
}

DpGains pole_placement_gains(const VesselModel& model, double bandwidth) {
  // Per-axis plant m_i vdot = m_i a_ii v + tau. Closing the loop with
  // tau = kp e + kd edot and demanding s^2 + 2 w s + w^2 (critical damping):
  //   kp_i = m_i w^2,  kd_i = m_i (2 w + a_ii).
  DpGains g;
  for (int i = 0; i < 3; ++i) {
    const double mi = 1.0 / model.B(i, i);
    g.kp(i) = mi * bandwidth * bandwidth;
    g.kd(i) = mi * (2.0 * bandwidth + model.A(i, i));
    if (g.kp(i) <= 0 || g.kd(i) <= 0) throw ConfigError("pole placement gains not positive");
  }
  return g;
}

ShipState step_vessel(const ShipState& state, const Eigen::Vector3d& tau,
                      const Eigen::Vector3d& tau_env, const VesselModel& model, double dt) {
  if (dt <= 0) throw ConfigError("step_vessel: dt must be positive");
  using Vec6 = Eigen::Matrix<double, 6, 1>;
  Vec6 x;
  x << state.eta.x, state.eta.y, state.eta.psi, state.nu;
  const Eigen::Vector3d forcing = model.B * (tau + tau_env);
  auto deriv = [&](const Vec6& s) {
    Vec6 d;
    const Eigen::Vector2d vel = rot2(s(2)) * s.segment<2>(3);
    d(0) = vel(0);
    d(1) = vel(1);
    d(2) = s(5);
    d.tail<3>() = model.A * s.tail<3>() + forcing;
    return d;
  };
  const Vec6 k1 = deriv(x);
  const Vec6 k2 = deriv(x + 0.5 * dt * k1);
  const Vec6 k3 = deriv(x + 0.5 * dt * k2);
  const Vec6 k4 = deriv(x + dt * k3);
  const Vec6 xn = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  ShipState out;
  out.eta = Pose(xn(0), xn(1), xn(2));
  out.nu = xn.tail<3>();
  return out;
}

Eigen::Vector3d dp_control(const ShipState& state, const Pose& setpoint, double setpoint_speed,
                           const DpGains& gains, const VesselModel& model,
                           double setpoint_yaw_rate) {
  const Eigen::Vector2d perr_i(setpoint.x - state.eta.x, setpoint.y - state.eta.y);
  const Eigen::Vector2d perr_b = rot2(state.eta.psi).transpose() * perr_i;
  Eigen::Vector3d err(perr_b(0), perr_b(1), wrap_to_pi(setpoint.psi - state.eta.psi));

  // Desired velocity: setpoint speed along the setpoint heading, in body frame.
  const Eigen::Vector2d vd_i(setpoint_speed * std::cos(setpoint.psi),
                             setpoint_speed * std::sin(setpoint.psi));
  const Eigen::Vector2d vd_b = rot2(state.eta.psi).transpose() * vd_i;
  Eigen::Vector3d verr(vd_b(0) - state.nu(0), vd_b(1) - state.nu(1),
                       setpoint_yaw_rate - state.nu(2));

  Eigen::Vector3d tau = gains.kp.cwiseProduct(err) + gains.kd.cwiseProduct(verr);

  // Componentwise feasibility box from the actuator layout.
  Eigen::Vector3d cap = Eigen::Vector3d::Zero();
  for (int j = 0; j < 6; ++j) {
    const Eigen::Vector3d col = model.T.col(j) * model.K(j, j) * model.limits(j);
    cap += col.cwiseAbs();
  }
  for (int i = 0; i < 3; ++i) tau(i) = std::clamp(tau(i), -cap(i), cap(i));
  return tau;
}

Allocation allocate_thrust(const Eigen::Vector3d& tau, const VesselModel& model) {
  const Eigen::Matrix<double, 3, 6> TK = model.T * model.K;
  Allocation out;
  out.u = TK.completeOrthogonalDecomposition().solve(tau);
  for (int i = 0; i < 6; ++i) {
    out.u(i) = std::clamp(out.u(i), -model.limits(i), model.limits(i));
    out.rpm(i) = std::copysign(std::sqrt(std::fabs(out.u(i))), out.u(i));
  }
  out.realized = TK * out.u;
  return out;
}

double VelocityProfile::speed_at(double t) const {
  return std::min(U_nom, U_start + accel * std::max(0.0, t));
}

double VelocityProfile::distance_at(double t) const {
  t = std::max(0.0, t);
  if (U_start >= U_nom) return U_nom * t;
  const double t_ramp = (U_nom - U_start) / accel;
  if (t <= t_ramp) return U_start * t + 0.5 * accel * t * t;
  return U_start * t_ramp + 0.5 * accel * t_ramp * t_ramp + U_nom * (t - t_ramp);
}

VelocityProfile make_velocity_profile(double U_start, double U_nom, double accel) {
  if (accel <= 0 || U_nom < 0) throw ConfigError("velocity profile: accel > 0, U_nom >= 0");
  return VelocityProfile{U_start, U_nom, accel};
}

}  // namespace icenav
