#pragma once

#include <string>
#include <utility>
#include <vector>

#include "icenav/costmap.hpp"
#include "icenav/dubins.hpp"
#include "icenav/geometry.hpp"

namespace icenav {

struct LatticeSpec {
  double spacing = 30.0;  // meters between lattice positions
  int n_headings = 8;
  double r_min = 150.0;
  int neighborhood = 5;       // control-set reach, in spacings
  double length_ratio = 1.5;  // keep primitives with length <= ratio * euclid
};

/// One precomputed lattice edge. Poses are relative to the start node
/// position (headings absolute); swath cells are offsets from the start
/// node's costmap cell, exact whenever spacing is a multiple of the grid
/// resolution.
struct MotionPrimitive {
  int start_heading = 0;
  int di = 0;  // lattice offset along x
  int dj = 0;  // lattice offset along y
  int end_heading = 0;
  std::vector<Pose> poses;
  double arc_length = 0.0;
  std::vector<std::pair<int, int>> swath;
};

struct ControlSet {
  LatticeSpec spec;
  double grid_res = 2.0;
  ShipFootprint footprint;
  std::vector<std::vector<MotionPrimitive>> by_heading;
};

/// Builds the control set: Dubins paths from each lattice heading to every
/// node in the neighborhood whose length stays within length_ratio of the
/// straight-line distance, with primitives decomposable into shorter in-set
/// pairs pruned. Throws ConfigError if the spacing does not divide into
/// grid_res cells or if some heading class has no forward primitive.
ControlSet generate_control_set(const LatticeSpec& spec, const ShipFootprint& footprint,
                                double grid_res);

/// Lower bound on the curvature-constrained path length from pose to the
/// goal line x = x_goal (CS construction; exact for headings within +-pi/2
/// of the goal direction, turn-extended beyond).
double h1_dubins_to_line(const Pose& pose, double x_goal, double r_min);

/// Obstacle-only heuristic: per cross-channel slice, the minimum cost of any
/// w_cells consecutive cells; queries sum slice minima strictly between the
/// pose and the goal line, shrunk by a footprint margin on both sides.
class H2Table {
 public:
  H2Table(const Costmap& map, int w_cells, double margin = 0.0);

  double query(double x, double x_goal) const;
  double column_min(int ix) const { return col_min_[static_cast<std::size_t>(ix)]; }

 private:
  GridSpec grid_;
  double margin_ = 0.0;
  std::vector<double> col_min_;
  std::vector<double> prefix_;  // prefix_[i] = sum of col_min_[0..i)
};

struct PlannedPath {
  std::vector<Pose> poses;
  std::vector<int> primitive_ids;  // (heading << 20) | index within class
};

struct PlannerResult {
  PlannedPath path;
  double length = 0.0;          // L_f
  double collision_cost = 0.0;  // C_f
  double objective = 0.0;       // J = L_f + alpha * C_f
  int nodes_expanded = 0;
};

/// Swath cost of one primitive placed with its start node at costmap cell
/// (base_col, base_row). Sets *blocked when any swept cell leaves the
/// channel laterally; with blocked == nullptr such cells are skipped
/// instead, which lets the search leave a start pose whose footprint
/// already pokes past the channel edge.
double edge_swath_cost(const MotionPrimitive& prim, int base_col, int base_row,
                       const Costmap& map, bool* blocked);

/// A* over the lattice anchored at the start pose (snapped to the costmap
/// grid), minimizing J = L + alpha * C to the line x = x_subgoal, with
/// h = h1 + alpha * h2 and re-expansion. Throws NoPathFound when the goal
/// line is unreachable.
PlannerResult plan_path(const Pose& start, double x_subgoal, const Costmap& map,
                        const ControlSet& cs, double alpha);

/// One-line JSON debug record for a planning query.
std::string planner_debug_json(const PlannerResult& result);

}  // namespace icenav
