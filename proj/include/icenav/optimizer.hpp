#pragma once

#include <utility>
#include <vector>

#include "icenav/costmap.hpp"
#include "icenav/geometry.hpp"
#include "icenav/lattice.hpp"

namespace icenav {

/// Collision-checking sample points in the ship body frame with their
/// quadrature weights.
struct BodyPointSet {
  std::vector<Point2> points;
  std::vector<double> weights;
};

/// Uniform db-spaced grid over the footprint's enclosing rectangle; every
/// weight is alpha * db^2 / (length * grid_res^2) so the body-point integral
/// prices collisions on the same scale as the lattice swath sums.
BodyPointSet default_body_points(const ShipFootprint& footprint, double db, double alpha,
                                 double grid_res);

/// One RK4 step of the arc-length unicycle (x' = cos psi, y' = sin psi,
/// psi' = kappa). Closed form: the heading update is exact and the position
/// update reduces to Simpson's rule.
Pose rk4_unicycle_step(const Pose& pose, double kappa, double ds);

/// Multiple-shooting decision vector layout:
///   [x_1, y_1, psi_1, ..., x_{N+1}, y_{N+1}, psi_{N+1}, kappa_1..kappa_N, ds]
struct NlpProblem {
  int N = 0;
  double lambda = 5e4;
  BodyPointSet body;
  const CostField* field = nullptr;
};

/// Objective of the refinement NLP (collision integral + path length +
/// curvature smoothness; kappa at the terminal stage is taken as kappa_N)
/// with its analytic gradient over all decision variables.
std::pair<double, std::vector<double>> nlp_objective(const NlpProblem& problem,
                                                     const std::vector<double>& vars);

enum class SolveStatus { Converged, MaxIter, Infeasible };

struct OptimizedPath {
  std::vector<Pose> poses;     // N+1
  std::vector<double> kappas;  // N
  double ds = 0.0;
  double objective = 0.0;       // nlp_objective at the returned variables
  double warm_objective = 0.0;  // same evaluator at the (repaired) warm start
  SolveStatus status = SolveStatus::MaxIter;
  int iterations = 0;
};

struct OptimizerParams {
  double ds_init = 4.0;
  double r_min = 150.0;
  double lambda = 5e4;
  double x_subgoal = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;  // channel extent for the hard on-return check
  double tol_terminal = 1e-6;
  int max_outer = 10;
  int max_inner = 120;
  bool verbose = false;  // per-iteration JSON lines on stderr
};

/// Warm-started refinement. The warm start is resampled to N+1 poses at
/// ds_init spacing (truncated at the subgoal line); curvature and ds are the
/// free variables, states follow by exact rollout, so the dynamics residual
/// of the returned path is zero by construction. The terminal x = x_subgoal
/// equality is handled by an augmented Lagrangian with projected-gradient
/// inner iterations. Throws InfeasibleWarmStart when the resampled start
/// cannot be repaired onto the subgoal line.
OptimizedPath optimize_path(const PlannedPath& warm, const CostField& field,
                            const BodyPointSet& body, const OptimizerParams& params);

}  // namespace icenav
