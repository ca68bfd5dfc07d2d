#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace icenav {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kPi = 3.1415926535897932384626433832795;

/// Wrap an angle to [0, 2*pi).
double wrap_to_2pi(double a);

/// Wrap an angle to (-pi, pi].
double wrap_to_pi(double a);

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Point2& o) const { return x * o.x + y * o.y; }
  double cross(const Point2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

/// Ship configuration (x, y, psi) with psi wrapped to [0, 2*pi).
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;

  Pose() = default;
  Pose(double x_, double y_, double psi_) : x(x_), y(y_), psi(wrap_to_2pi(psi_)) {}
  Point2 position() const { return {x, y}; }
};

/// Counter-clockwise convex polygon, vertices deduplicated.
struct ConvexPolygon {
  std::vector<Point2> vertices;

  ConvexPolygon() = default;
  explicit ConvexPolygon(std::vector<Point2> verts);

  std::size_t size() const { return vertices.size(); }
  bool contains(const Point2& p, double tol = 1e-9) const;
  ConvexPolygon transformed(const Pose& pose) const;
  ConvexPolygon scaled_about(const Point2& center, double factor) const;
};

struct PolygonProperties {
  double area = 0.0;
  Point2 centroid;
  double bounding_radius = 0.0;
};

struct ShipFootprint {
  ConvexPolygon outline;  // body frame, origin inside, bow at +x_b
  double length = 0.0;
  double width = 0.0;
};

/// Uniform grid over the channel. Cell (ix, iy) spans
/// [origin.x + ix*res, origin.x + (ix+1)*res) x [origin.y + iy*res, ...).
struct GridSpec {
  double resolution = 1.0;
  int n_rows = 0;  // cells along y
  int n_cols = 0;  // cells along x
  Point2 origin;

  int cell_count() const { return n_rows * n_cols; }
  int flat(int ix, int iy) const { return iy * n_cols + ix; }
  int col_of(double x) const { return static_cast<int>(std::floor((x - origin.x) / resolution)); }
  int row_of(double y) const { return static_cast<int>(std::floor((y - origin.y) / resolution)); }
  Point2 cell_center(int ix, int iy) const {
    return {origin.x + (ix + 0.5) * resolution, origin.y + (iy + 0.5) * resolution};
  }
  bool in_bounds(int ix, int iy) const { return ix >= 0 && ix < n_cols && iy >= 0 && iy < n_rows; }
};

/// Minimal CCW convex hull (monotone chain). Throws DegenerateInput if all
/// points are collinear.
ConvexPolygon convex_hull(std::vector<Point2> points);

/// Shoelace area, area-weighted centroid, max vertex distance from centroid.
PolygonProperties polygon_properties(const ConvexPolygon& p);

/// Cells whose square overlaps the polygon with positive area.
/// Exact polygon/cell clipping, no center sampling.
std::vector<int> rasterize_polygon(const ConvexPolygon& p, const GridSpec& grid);

/// Area of the intersection of a convex polygon with an axis-aligned box,
/// via Sutherland-Hodgman clipping.
double clip_area_aabb(const ConvexPolygon& p, double x0, double y0, double x1, double y1);

/// Union of rasterized footprints sampled along the path at arc spacing
/// <= grid.resolution / 2. Returns sorted unique flat cell indices.
std::vector<int> swath_trace(const std::vector<Pose>& path, const ShipFootprint& footprint,
                             const GridSpec& grid);

/// Default footprint: rectangle length x width with a triangular bow
/// occupying the front bow_length meters, convexified.
ShipFootprint make_default_footprint(double length = 76.2, double width = 18.0,
                                     double bow_length = 15.0);

}  // namespace icenav
