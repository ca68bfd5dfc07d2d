#pragma once

#include <vector>

#include "icenav/geometry.hpp"
#include "icenav/icefield.hpp"

namespace icenav {

/// Dynamic rigid body for one floe. `local_poly` holds vertices about the
/// centroid; the world polygon is local rotated by `orientation` and
/// translated to `position`.
struct FloeBody {
  int id = 0;
  Point2 position;
  double orientation = 0.0;
  Point2 velocity;
  double omega = 0.0;
  double mass = 0.0;
  double inertia = 0.0;  // about centroid, kg m^2
  ConvexPolygon local_poly;
  double thickness = 1.2;
  double density = 900.0;
  double bounding_radius = 0.0;

  ConvexPolygon world_poly() const;
};

/// One logged ship-floe impact (one per contact pair per substep).
struct CollisionEvent {
  double time = 0.0;
  int floe_id = 0;
  double impulse = 0.0;       // accumulated normal impulse magnitude, N s
  Point2 impulse_vec;         // total impulse on the floe, world frame (incl. friction)
  Point2 contact_body;        // contact point in the ship body frame
  Point2 normal;              // world frame, from ship into floe
  double ship_psi = 0.0;      // ship heading when the impulse was applied
  double floe_mass = 0.0;
  Point2 v_pre, v_post;       // floe linear velocity around the resolution pass
  double omega_pre = 0.0, omega_post = 0.0;
  double dk_sys = 0.0;  // -1/2 M_eq V_eq^2 from the measured approach speed
  double dk_ice = 0.0;  // floe KE change (linear + rotational)
};

struct MaterialParams {
  double restitution = 0.1;
  double mu_ship_ice = 0.05;
  double mu_ice_ice = 0.35;
  double drag_coeff = 1.0;
  double angular_decay = 0.03;  // fraction per 0.005 s reference substep
  double rho_water = 1025.0;
};

/// Contact between `a` and `b`; indices >= 0 are floes, kShip/kWallLow/kWallHigh
/// otherwise. Normal points from a into b.
struct Contact {
  static constexpr int kShip = -1;
  static constexpr int kWallLow = -2;
  static constexpr int kWallHigh = -3;
  int a = 0, b = 0;
  Point2 point;
  Point2 normal;
  double depth = 0.0;
};

struct SimWorld {
  double dt_sim = 0.005;
  double time = 0.0;
  double y_min = 0.0, y_max = 0.0;  // channel walls
  MaterialParams materials;
  double ship_mass = 6e6;
  ShipFootprint ship_footprint;
  Pose ship_pose;
  std::vector<FloeBody> floes;
};

/// Second moment of a polygon about the origin of its vertex frame, per unit
/// mass density (multiply by density * thickness for kg m^2).
double polygon_second_moment(const ConvexPolygon& poly);

SimWorld make_world(const IceField& field, const ShipFootprint& footprint, double ship_mass,
                    double dt_sim = 0.005);

/// Bounding-circle broadphase + separating-axis narrowphase, reduced to the
/// single deepest contact point per pair.
std::vector<Contact> detect_contacts(const SimWorld& world);

/// Quadratic drag on the submerged cross-section projected perpendicular to
/// the velocity, integrated exactly along the fixed direction; angular
/// velocity decays multiplicatively.
void apply_drag(FloeBody& floe, double dt, const MaterialParams& materials);

struct StepResult {
  double tau_env_x = 0.0, tau_env_y = 0.0, tau_env_n = 0.0;  // ship body frame
  std::vector<CollisionEvent> events;
};

/// Advances the world by dt_ctrl in dt_sim substeps. The ship is kinematic:
/// its pose is interpolated from the stored pose to `ship_pose_end` and its
/// contact velocity uses the supplied world-frame linear velocity and yaw
/// rate. tau_env is exactly the sum over logged events of impulse/dt_sim
/// mapped into the ship body frame.
StepResult step_world(SimWorld& world, const Pose& ship_pose_end, const Point2& ship_velocity,
                      double ship_yaw_rate, double dt_ctrl);

}  // namespace icenav
