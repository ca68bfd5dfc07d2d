#include "icenav/costmap.hpp"

#include <algorithm>
#include <cmath>

#include "icenav/errors.hpp"

namespace icenav {

double ke_loss(double d, double r_ice, double m_ice, double m_ship, double speed) {
  if (!(r_ice > 0) || d < 0 || d > r_ice) throw DomainError("ke_loss: need 0 <= d <= r_ice");
  if (!(m_ice > 0) || !(m_ship > 0) || speed < 0) {
    throw DomainError("ke_loss: masses must be positive and speed >= 0");
  }
  const double msum = m_ice + m_ship;
  const double mass_term = m_ice * m_ship * (m_ice + 2.0 * m_ship) / (2.0 * msum * msum);
  return mass_term * speed * speed * (r_ice * r_ice - d * d) / (r_ice * r_ice);
}

double Costmap::max_cost() const {
  double m = 0.0;
  for (double c : cost) m = std::max(m, c);
  return m;
}

namespace {

// Symmetric (edge-inclusive) mirror fold of an index into [0, n).
int mirror_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i = ((i % period) + period) % period;
  return i < n ? i : period - 1 - i;
}

}  // namespace

std::vector<double> concentration_penalty(const std::vector<std::uint8_t>& occupancy,
                                          const GridSpec& grid, int kernel_size, double beta) {
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    throw ConfigError("concentration_penalty: kernel size must be odd and >= 1");
  }
  const int half = kernel_size / 2;
  const int nc = grid.n_cols, nr = grid.n_rows;
  // Separable mean filter: horizontal pass then vertical pass.
  std::vector<double> tmp(occupancy.size(), 0.0);
  for (int iy = 0; iy < nr; ++iy) {
    for (int ix = 0; ix < nc; ++ix) {
      double s = 0.0;
      for (int k = -half; k <= half; ++k) {
        s += occupancy[static_cast<std::size_t>(grid.flat(mirror_index(ix + k, nc), iy))];
      }
      tmp[static_cast<std::size_t>(grid.flat(ix, iy))] = s / kernel_size;
    }
  }
  std::vector<double> out(occupancy.size(), 0.0);
  for (int iy = 0; iy < nr; ++iy) {
    for (int ix = 0; ix < nc; ++ix) {
      double s = 0.0;
      for (int k = -half; k <= half; ++k) {
        s += tmp[static_cast<std::size_t>(grid.flat(ix, mirror_index(iy + k, nr)))];
      }
      out[static_cast<std::size_t>(grid.flat(ix, iy))] = std::pow(s / kernel_size, beta);
    }
  }
  return out;
}

Costmap build_costmap(const IceField& field, double u_nominal, double m_ship,
                      const CostmapParams& params) {
  Costmap map;
  map.grid.resolution = params.grid_resolution;
  map.grid.n_cols = static_cast<int>(std::ceil(field.channel_length / params.grid_resolution));
  map.grid.n_rows = static_cast<int>(std::ceil(field.channel_width / params.grid_resolution));
  map.grid.origin = {0.0, 0.0};
  map.cost.assign(static_cast<std::size_t>(map.grid.cell_count()), 0.0);
  map.obstacle_id.assign(static_cast<std::size_t>(map.grid.cell_count()), -1);

  const auto occupancy = occupancy_image(field, map.grid);
  const auto conc = concentration_penalty(occupancy, map.grid, params.kernel_size, params.beta);

  for (const auto& floe : field.floes) {
    const double inflate = 1.0 + params.scale_factor;
    const ConvexPolygon scaled = floe.polygon.scaled_about(floe.centroid, inflate);
    const double r_scaled = floe.bounding_radius * inflate;
    for (int cell : rasterize_polygon(scaled, map.grid)) {
      const int ix = cell % map.grid.n_cols;
      const int iy = cell / map.grid.n_cols;
      const double d = (map.grid.cell_center(ix, iy) - floe.centroid).norm();
      double c = 0.0;
      if (d < r_scaled) {
        c = ke_loss(d, r_scaled, floe.mass, m_ship, u_nominal) *
            conc[static_cast<std::size_t>(cell)];
      }
      auto& slot = map.cost[static_cast<std::size_t>(cell)];
      if (c > slot) {
        slot = c;
        map.obstacle_id[static_cast<std::size_t>(cell)] = floe.id;
      }
    }
  }
  return map;
}

double swath_cost(const std::vector<int>& swath, const Costmap& map) {
  double total = 0.0;
  for (int cell : swath) total += map.cost[static_cast<std::size_t>(cell)];
  return total;
}

namespace {

// Catmull-Rom cubic on [0, 1] through p1, p2 with centered-difference
// slopes; returns value and derivative w.r.t. t.
inline void catmull_rom(double p0, double p1, double p2, double p3, double t, double& v,
                        double& dv) {
  const double m1 = 0.5 * (p2 - p0);
  const double m2 = 0.5 * (p3 - p1);
  const double a = 2 * p1 - 2 * p2 + m1 + m2;
  const double b = -3 * p1 + 3 * p2 - 2 * m1 - m2;
  v = ((a * t + b) * t + m1) * t + p1;
  dv = (3 * a * t + 2 * b) * t + m1;
}

// C1 ramp: 0 at t=0, 1 for t>=1, zero slope at both ends.
inline void smoothstep(double t, double& v, double& dv) {
  if (t <= 0) {
    v = 0;
    dv = 0;
  } else if (t >= 1) {
    v = 1;
    dv = 0;
  } else {
    v = t * t * (3 - 2 * t);
    dv = 6 * t * (1 - t);
  }
}

}  // namespace

CostField::CostField(const Costmap& map, double boundary_penalty, double boundary_margin)
    : grid_(map.grid),
      boundary_penalty_(boundary_penalty),
      boundary_margin_(boundary_margin) {
  // Interpolating sqrt(cost) and squaring keeps the field nonnegative while
  // staying exact at the knots and C1 everywhere.
  data_.resize(map.cost.size());
  for (std::size_t i = 0; i < map.cost.size(); ++i) data_[i] = std::sqrt(map.cost[i]);
  y_min_ = grid_.origin.y;
  y_max_ = grid_.origin.y + grid_.n_rows * grid_.resolution;
}

double CostField::knot(int ix, int iy) const {
  ix = std::clamp(ix, 0, grid_.n_cols - 1);
  iy = std::clamp(iy, 0, grid_.n_rows - 1);
  return data_[static_cast<std::size_t>(grid_.flat(ix, iy))];
}

std::pair<double, Point2> CostField::eval(double x, double y) const {
  const double res = grid_.resolution;
  // Knots live at cell centers.
  const double fx = (x - grid_.origin.x) / res - 0.5;
  const double fy = (y - grid_.origin.y) / res - 0.5;
  const int ix = static_cast<int>(std::floor(fx));
  const int iy = static_cast<int>(std::floor(fy));
  const double tx = fx - ix;
  const double ty = fy - iy;

  double col[4], dcol[4];
  for (int j = 0; j < 4; ++j) {
    double v, dv;
    catmull_rom(knot(ix - 1, iy - 1 + j), knot(ix, iy - 1 + j), knot(ix + 1, iy - 1 + j),
                knot(ix + 2, iy - 1 + j), tx, v, dv);
    col[j] = v;
    dcol[j] = dv;
  }
  double g, dg_dty, dg_dtx, unused;
  catmull_rom(col[0], col[1], col[2], col[3], ty, g, dg_dty);
  catmull_rom(dcol[0], dcol[1], dcol[2], dcol[3], ty, dg_dtx, unused);

  double value = g * g;
  Point2 grad{2.0 * g * dg_dtx / res, 2.0 * g * dg_dty / res};

  // Out-of-channel penalty ramp across the walls.
  const double outside = std::max(y_min_ - y, y - y_max_);
  if (outside > 0 && boundary_margin_ > 0) {
    double s, ds;
    smoothstep(outside / boundary_margin_, s, ds);
    value += boundary_penalty_ * s;
    const double sign = (y < y_min_) ? -1.0 : 1.0;
    grad.y += sign * boundary_penalty_ * ds / boundary_margin_;
  }
  return {value, grad};
}

}  // namespace icenav
