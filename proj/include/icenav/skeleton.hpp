#pragma once

#include <cstdint>
#include <vector>

#include "icenav/geometry.hpp"
#include "icenav/icefield.hpp"

namespace icenav {

/// Zhang-Suen thinning of a binary image (row-major, 1 = foreground) down to
/// a 1-pixel-wide skeleton.
std::vector<std::uint8_t> zhang_suen_thin(std::vector<std::uint8_t> image, int rows, int cols);

/// 3x3 morphological erosion of the foreground.
std::vector<std::uint8_t> erode3x3(const std::vector<std::uint8_t>& image, int rows, int cols);

/// Skeleton-of-open-water route: thin the free-space mask, run Dijkstra over
/// the 8-connected skeleton pixel graph (Euclidean weights) from the pixel
/// nearest the start to the subgoal line, then shortcut and roll the polyline
/// out under a curvature clamp of 1/r_min. If the graph is disconnected the
/// obstacle mask is eroded one cell and the whole pipeline retries; throws
/// PlanningFailure only when erosion empties the mask without a route.
std::vector<Pose> skeleton_path(const IceField& field, const Pose& start, double x_subgoal,
                                double grid_res, double r_min);

}  // namespace icenav
