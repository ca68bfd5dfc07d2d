#pragma once

#include "icenav/costmap.hpp"
#include "icenav/lattice.hpp"
#include "icenav/optimizer.hpp"
#include "icenav/ship.hpp"
#include "icenav/skeleton.hpp"

namespace icenav {

struct NavConfig {
  double delta_h = 500.0;  // planning horizon, m
  double delta_t = 30.0;   // replan interval, simulated s
  double u_nom = 2.0;
  double alpha = 4.8e-7;
  double eps_switch = 0.05;
  double x_goal = 0.0;
  bool refine = true;  // false: ship the stage-1 lattice path unrefined
  double ship_mass = 6e6;
  LatticeSpec lattice;
  CostmapParams costmap;
  double ds_init = 4.0;
  double lambda = 5e4;
  double body_spacing = 6.0;
  double profile_accel = 0.04;
  // A floe close to a channel wall cannot yield when pushed toward it, so
  // collisions there are far harsher than the floe's own mass suggests. The
  // planner prices such floes as heavier: mass is scaled by up to
  // (1 + pinch_gain) as the floe-to-wall gap shrinks below pinch_range.
  double pinch_range = 15.0;
  double pinch_gain = 4.0;
  ShipFootprint footprint = make_default_footprint();
};

struct NavPlan {
  std::vector<Pose> path;
  VelocityProfile profile;
  double stage1_objective = 0.0;  // warm start under the stage-2 evaluator
  double stage2_objective = 0.0;
  double planning_ms = 0.0;
};

/// Discrete path integral of (1 + body-point collision cost) over the portion
/// of the path with x in [x_from, x_to]; the comparison metric of the switch
/// rule.
double evaluate_plan_cost(const std::vector<Pose>& path, const CostField& field,
                          const BodyPointSet& body, double x_from, double x_to);

/// One receding-horizon iteration: costmap from the current floes, lattice
/// search to the subgoal line at min(x + delta_h, x_goal), NLP refinement,
/// velocity ramp from the current speed. If `previous` still covers at least
/// half the horizon and re-evaluates within (1 + eps_switch) of the new plan
/// on the current costmap, it is kept (profile refreshed).
NavPlan auto_icenav_iteration(const Pose& pose, double current_speed, const IceField& field,
                              const ControlSet& control_set, const NavConfig& cfg,
                              const NavPlan* previous = nullptr);

/// Straight baseline: constant-y path to x_goal; the velocity profile is
/// still replanned from the current speed.
NavPlan run_straight(const Pose& start, double current_speed, const NavConfig& cfg);

/// Skeleton baseline: morphological-skeleton route over the full field.
NavPlan run_skeleton(const Pose& start, double current_speed, const IceField& field,
                     const NavConfig& cfg);

}  // namespace icenav
