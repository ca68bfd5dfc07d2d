#include "icenav/navigation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "icenav/errors.hpp"

namespace icenav {

double evaluate_plan_cost(const std::vector<Pose>& path, const CostField& field,
                          const BodyPointSet& body, double x_from, double x_to) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Pose& a = path[i];
    const Pose& b = path[i + 1];
    const double mx = 0.5 * (a.x + b.x);
    if (mx < x_from || mx > x_to) continue;
    const double dl = std::hypot(b.x - a.x, b.y - a.y);
    const double my = 0.5 * (a.y + b.y);
    const double psi = std::atan2(b.y - a.y, b.x - a.x);
    const double c = std::cos(psi), s = std::sin(psi);
    double density = 1.0;
    for (std::size_t j = 0; j < body.points.size(); ++j) {
      const Point2& bp = body.points[j];
      density += body.weights[j] * field.value(mx + c * bp.x - s * bp.y, my + s * bp.x + c * bp.y);
    }
    acc += density * dl;
  }
  return acc;
}

NavPlan auto_icenav_iteration(const Pose& pose, double current_speed, const IceField& field,
                              const ControlSet& control_set, const NavConfig& cfg,
                              const NavPlan* previous) {
  if (pose.x >= cfg.x_goal) throw ConfigError("auto_icenav_iteration: already past the goal");
  const auto t0 = std::chrono::steady_clock::now();
  const double subgoal = std::min(pose.x + cfg.delta_h, cfg.x_goal);

  // Too little runway left for a lattice step: hold course to the goal line.
  if (subgoal - pose.x < 2.0 * cfg.lattice.spacing) {
    NavPlan stub = run_straight(Pose(pose.x, pose.y, 0.0), current_speed, cfg);
    stub.planning_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return stub;
  }

  // Cost model: a floe sitting close to a wall cannot yield when the hull
  // pushes it toward that wall, so the effective mass behind such a collision
  // is much larger than the floe's own. Price those floes up before building
  // the costmap.
  IceField priced = field;
  if (cfg.pinch_range > 0 && cfg.pinch_gain > 0) {
    for (auto& floe : priced.floes) {
      double gap = std::numeric_limits<double>::infinity();
      for (const auto& v : floe.polygon.vertices) {
        gap = std::min({gap, v.y, field.channel_width - v.y});
      }
      gap = std::max(gap, 0.0);
      if (gap < cfg.pinch_range) {
        floe.mass *= 1.0 + cfg.pinch_gain * (1.0 - gap / cfg.pinch_range);
      }
    }
  }
  const Costmap map = build_costmap(priced, cfg.u_nom, cfg.ship_mass, cfg.costmap);
  const CostField cost_field(map, 10.0 * std::max(map.max_cost(), 1.0), cfg.footprint.width);
  const BodyPointSet body = default_body_points(cfg.footprint, cfg.body_spacing, cfg.alpha,
                                                cfg.costmap.grid_resolution);

  PlannerResult stage1;
  try {
    stage1 = plan_path(pose, subgoal, map, control_set, cfg.alpha);
  } catch (const NoPathFound&) {
    // The snapped heading class can be boxed in near a wall even though the
    // true heading is recoverable (e.g. -27 deg snaps to the -45 deg class,
    // whose primitives all sweep outside the channel from low y). Retry the
    // search from the straight-ahead class at a wall-cleared y; the tracking
    // controller absorbs the initial mismatch.
    const double margin = cfg.footprint.width / 2 + cfg.costmap.grid_resolution;
    const Pose recovery(pose.x,
                        std::clamp(pose.y, margin, field.channel_width - margin), 0.0);
    try {
      stage1 = plan_path(recovery, subgoal, map, control_set, cfg.alpha);
    } catch (const NoPathFound& e) {
      throw PlanningFailure(std::string(e.what()) + " (pose " + std::to_string(pose.x) + ", " +
                            std::to_string(pose.y) + ", " + std::to_string(pose.psi) +
                            " -> subgoal " + std::to_string(subgoal) + ")");
    }
  }

  NavPlan plan;
  if (cfg.refine) {
    OptimizerParams op;
    op.ds_init = cfg.ds_init;
    op.r_min = cfg.lattice.r_min;
    op.lambda = cfg.lambda;
    op.x_subgoal = subgoal;
    op.y_min = 0.0;
    op.y_max = field.channel_width;
    const OptimizedPath opt = optimize_path(stage1.path, cost_field, body, op);
    plan.path = opt.poses;
    plan.stage1_objective = opt.warm_objective;
    plan.stage2_objective = opt.objective;
  } else {
    plan.path = stage1.path.poses;
    plan.stage1_objective = plan.stage2_objective = stage1.objective;
  }
  plan.profile = make_velocity_profile(std::min(current_speed, cfg.u_nom), cfg.u_nom,
                                       cfg.profile_accel);

  // Keeping the previous plan is only sensible while the ship can still reach
  // it: if ice has shoved the ship away laterally, a stale plan turns into a
  // runaway cross-track reference that the controller fights with saturated
  // sway thrust. Measure the ship's distance to the previous path first.
  double prev_dist = std::numeric_limits<double>::infinity();
  if (previous) {
    for (std::size_t i = 0; i + 1 < previous->path.size(); ++i) {
      const Point2 a = previous->path[i].position(), b = previous->path[i + 1].position();
      const Point2 ab = b - a;
      const double len2 = ab.dot(ab);
      const double t = len2 > 1e-18
                           ? std::clamp((pose.position() - a).dot(ab) / len2, 0.0, 1.0)
                           : 0.0;
      prev_dist = std::min(prev_dist, (pose.position() - (a + ab * t)).norm());
    }
  }
  if (previous && !previous->path.empty() && prev_dist <= 2.0 * cfg.costmap.grid_resolution &&
      previous->path.back().x >= pose.x + 0.5 * (subgoal - pose.x)) {
    const double x_to = std::min(subgoal, previous->path.back().x);
    const double old_obj = evaluate_plan_cost(previous->path, cost_field, body, pose.x, x_to);
    const double new_obj = evaluate_plan_cost(plan.path, cost_field, body, pose.x, x_to);
    if (old_obj <= new_obj * (1.0 + cfg.eps_switch)) {
      NavPlan kept = *previous;
      kept.profile = plan.profile;
      kept.planning_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
      return kept;
    }
  }
  plan.planning_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return plan;
}

NavPlan run_straight(const Pose& start, double current_speed, const NavConfig& cfg) {
  NavPlan plan;
  const double span = cfg.x_goal - start.x;
  const int n = std::max(1, static_cast<int>(std::ceil(span / 5.0)));
  for (int i = 0; i <= n; ++i) plan.path.push_back(Pose(start.x + span * i / n, start.y, 0.0));
  plan.profile = make_velocity_profile(std::min(current_speed, cfg.u_nom), cfg.u_nom,
                                       cfg.profile_accel);
  plan.stage1_objective = plan.stage2_objective = span;
  return plan;
}

NavPlan run_skeleton(const Pose& start, double current_speed, const IceField& field,
                     const NavConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  NavPlan plan;
  plan.path = skeleton_path(field, start, cfg.x_goal, cfg.costmap.grid_resolution,
                            cfg.lattice.r_min);
  plan.profile = make_velocity_profile(std::min(current_speed, cfg.u_nom), cfg.u_nom,
                                       cfg.profile_accel);
  double len = 0;
  for (std::size_t i = 0; i + 1 < plan.path.size(); ++i)
    len += std::hypot(plan.path[i + 1].x - plan.path[i].x, plan.path[i + 1].y - plan.path[i].y);
  plan.stage1_objective = plan.stage2_objective = len;
  plan.planning_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return plan;
}

}  // namespace icenav
