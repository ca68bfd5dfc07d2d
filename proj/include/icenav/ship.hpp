#pragma once

#include <Eigen/Dense>

#include "icenav/geometry.hpp"

namespace icenav {

/// 3-DoF vessel state: inertial pose plus body-frame velocity (surge, sway,
/// yaw rate).
struct ShipState {
  Pose eta;
  Eigen::Vector3d nu = Eigen::Vector3d::Zero();

  double speed() const { return std::hypot(nu(0), nu(1)); }
};

/// Linear low-speed state-space model nu_dot = A nu + B (tau + tau_env) with
/// a fixed actuator layout: two stern main propellers (surge) and four tunnel
/// thrusters (sway), columns of T in that order.
struct VesselModel {
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d B = Eigen::Matrix3d::Identity();
  double mass = 6e6;
  Eigen::Matrix<double, 3, 6> T = Eigen::Matrix<double, 3, 6>::Zero();
  Eigen::Matrix<double, 6, 6> K = Eigen::Matrix<double, 6, 6>::Identity();
  Eigen::Matrix<double, 6, 1> limits = Eigen::Matrix<double, 6, 1>::Zero();  // N, per actuator
  ShipFootprint footprint;
};

/// Decoupled stable default: surge/sway/yaw time constants 50/50/20 s,
/// B = M^-1 with M = diag(mass, mass, Iz), Iz from the rectangular hull.
VesselModel make_default_vessel(double mass = 6e6,
                                const ShipFootprint& footprint = make_default_footprint());

struct DpGains {
  Eigen::Vector3d kp = Eigen::Vector3d::Zero();
  Eigen::Vector3d kd = Eigen::Vector3d::Zero();
};

/// Critically damped pole placement at the given closed-loop bandwidth
/// (rad/s) per axis, accounting for the model's own damping.
DpGains pole_placement_gains(const VesselModel& model, double bandwidth = 0.05);

/// One RK4 step of the coupled kinematics/dynamics over dt.
ShipState step_vessel(const ShipState& state, const Eigen::Vector3d& tau,
                      const Eigen::Vector3d& tau_env, const VesselModel& model, double dt);

/// PD tracking law on the body-frame pose error with feed-forward of the
/// setpoint speed and, on curved references, of the setpoint yaw rate
/// (curvature x speed; zero on straight segments); output clamped to the
/// force/moment box the actuators can realize.
Eigen::Vector3d dp_control(const ShipState& state, const Pose& setpoint, double setpoint_speed,
                           const DpGains& gains, const VesselModel& model,
                           double setpoint_yaw_rate = 0.0);

struct Allocation {
  Eigen::Matrix<double, 6, 1> u = Eigen::Matrix<double, 6, 1>::Zero();    // actuator forces, N
  Eigen::Matrix<double, 6, 1> rpm = Eigen::Matrix<double, 6, 1>::Zero();  // sign(u)*sqrt(|u|)
  Eigen::Vector3d realized = Eigen::Vector3d::Zero();  // T K u after clipping
};

/// Least-norm allocation u = (TK)^+ tau, then per-actuator clipping; the
/// realized wrench (post-saturation) is what the dynamics and the energy
/// metric must consume.
Allocation allocate_thrust(const Eigen::Vector3d& tau, const VesselModel& model);

/// Linear ramp from U_start to U_nom at a constant acceleration.
struct VelocityProfile {
  double U_start = 0.0;
  double U_nom = 2.0;
  double accel = 0.04;

  double speed_at(double t) const;
  double distance_at(double t) const;  // integral of speed_at over [0, t]
};

VelocityProfile make_velocity_profile(double U_start, double U_nom, double accel = 0.04);

}  // namespace icenav
