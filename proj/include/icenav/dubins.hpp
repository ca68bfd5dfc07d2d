#pragma once

#include <array>
#include <optional>
#include <vector>

#include "icenav/geometry.hpp"

namespace icenav {

enum class DubinsSegment { Left, Straight, Right };

/// Shortest curvature-bounded path between two oriented points.
/// Three segments; lengths are in meters (arcs stored as arc length).
struct DubinsPath {
  Pose start;
  double radius = 0.0;
  std::array<DubinsSegment, 3> segments{};
  std::array<double, 3> lengths{};  // each >= 0

  double total_length() const { return lengths[0] + lengths[1] + lengths[2]; }

  /// Pose at arc length s along the path, s in [0, total_length].
  Pose at(double s) const;

  /// Poses sampled at arc spacing <= ds, endpoints included.
  std::vector<Pose> sample(double ds) const;
};

/// Computes the shortest Dubins path from a to b with minimum turning
/// radius r. Returns nullopt only for non-finite input.
std::optional<DubinsPath> dubins_shortest_path(const Pose& a, const Pose& b, double r);

}  // namespace icenav
