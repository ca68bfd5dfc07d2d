#pragma once

#include <utility>
#include <vector>

#include "icenav/geometry.hpp"
#include "icenav/icefield.hpp"

namespace icenav {

/// Kinetic energy lost by the ship in a single disk-model ship-ice
/// collision (positive convention), as a function of the lateral offset d
/// from the floe centroid, the floe bounding radius, the two masses, and
/// the ship speed.
double ke_loss(double d, double r_ice, double m_ice, double m_ship, double speed);

struct CostmapParams {
  double grid_resolution = 2.0;
  double scale_factor = 0.1;  // obstacle footprint inflation
  int kernel_size = 51;       // concentration mean filter, odd
  double beta = 1.0;          // concentration exponent
};

struct Costmap {
  GridSpec grid;
  std::vector<double> cost;       // per cell, >= 0
  std::vector<int> obstacle_id;   // per cell, -1 for open water

  double at(int ix, int iy) const { return cost[static_cast<std::size_t>(grid.flat(ix, iy))]; }
  double max_cost() const;
};

/// Mean filter of the binary occupancy under mirror padding, raised to
/// beta. Values lie in [0, 1].
std::vector<double> concentration_penalty(const std::vector<std::uint8_t>& occupancy,
                                          const GridSpec& grid, int kernel_size, double beta);

/// Discrete collision costmap: scaled floes rasterized, each covered cell
/// priced by ke_loss * concentration penalty, overlaps resolved by
/// per-cell maximum.
Costmap build_costmap(const IceField& field, double u_nominal, double m_ship,
                      const CostmapParams& params);

/// Sum of the costmap over a swath (set of flat cell indices).
double swath_cost(const std::vector<int>& swath, const Costmap& map);

/// C1 bicubic interpolant over the costmap cell centers with an
/// out-of-channel penalty ramp. Total on R^2.
class CostField {
 public:
  CostField(const Costmap& map, double boundary_penalty, double boundary_margin);

  /// Value and analytic gradient at a world point.
  std::pair<double, Point2> eval(double x, double y) const;
  double value(double x, double y) const { return eval(x, y).first; }

  double boundary_penalty() const { return boundary_penalty_; }
  const GridSpec& grid() const { return grid_; }

 private:
  double knot(int ix, int iy) const;

  GridSpec grid_;
  std::vector<double> data_;
  double boundary_penalty_ = 0.0;
  double boundary_margin_ = 0.0;
  double y_min_ = 0.0, y_max_ = 0.0;  // channel extent across
};

}  // namespace icenav
