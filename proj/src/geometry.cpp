#include "icenav/geometry.hpp"

#include <algorithm>
#include <set>

#include "icenav/errors.hpp"

namespace icenav {

double wrap_to_2pi(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

double wrap_to_pi(double a) {
  a = std::fmod(a + kPi, kTwoPi);
  if (a <= 0.0) a += kTwoPi;
  return a - kPi;
}

ConvexPolygon::ConvexPolygon(std::vector<Point2> verts) : vertices(std::move(verts)) {
  // Deduplicate consecutive vertices within 1e-9 m.
  std::vector<Point2> out;
  for (const auto& v : vertices) {
    if (out.empty() || (v - out.back()).norm() > 1e-9) out.push_back(v);
  }
  if (out.size() > 1 && (out.front() - out.back()).norm() <= 1e-9) out.pop_back();
  vertices = std::move(out);
  if (vertices.size() < 3) throw DegenerateInput("polygon needs >=3 distinct vertices");
}

bool ConvexPolygon::contains(const Point2& p, double tol) const {
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = vertices[i];
    const Point2& b = vertices[(i + 1) % n];
    if ((b - a).cross(p - a) < -tol) return false;
  }
  return true;
}

ConvexPolygon ConvexPolygon::transformed(const Pose& pose) const {
  const double c = std::cos(pose.psi), s = std::sin(pose.psi);
  std::vector<Point2> out;
  out.reserve(vertices.size());
  for (const auto& v : vertices) {
    out.push_back({pose.x + c * v.x - s * v.y, pose.y + s * v.x + c * v.y});
  }
  ConvexPolygon p;
  p.vertices = std::move(out);  // rigid transform preserves validity
  return p;
}

ConvexPolygon ConvexPolygon::scaled_about(const Point2& center, double factor) const {
  std::vector<Point2> out;
  out.reserve(vertices.size());
  for (const auto& v : vertices) out.push_back(center + (v - center) * factor);
  ConvexPolygon p;
  p.vertices = std::move(out);
  return p;
}

ConvexPolygon convex_hull(std::vector<Point2> points) {
  if (points.size() < 3) throw DegenerateInput("convex_hull: need >=3 points");
  std::sort(points.begin(), points.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  points.erase(std::unique(points.begin(), points.end(),
                           [](const Point2& a, const Point2& b) {
                             return (a - b).norm() <= 1e-9;
                           }),
               points.end());
  const std::size_t n = points.size();
  if (n < 3) throw DegenerateInput("convex_hull: fewer than 3 distinct points");

  std::vector<Point2> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {  // lower
    while (k >= 2 && (hull[k - 1] - hull[k - 2]).cross(points[i] - hull[k - 2]) <= 0) --k;
    hull[k++] = points[i];
  }
  for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {  // upper
    while (k >= t && (hull[k - 1] - hull[k - 2]).cross(points[i] - hull[k - 2]) <= 0) --k;
    hull[k++] = points[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) throw DegenerateInput("convex_hull: collinear input");
  ConvexPolygon p;
  p.vertices = std::move(hull);
  return p;
}

PolygonProperties polygon_properties(const ConvexPolygon& p) {
  const auto& v = p.vertices;
  const std::size_t n = v.size();
  double a2 = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p0 = v[i];
    const Point2& p1 = v[(i + 1) % n];
    const double cr = p0.cross(p1);
    a2 += cr;
    cx += (p0.x + p1.x) * cr;
    cy += (p0.y + p1.y) * cr;
  }
  const double area = 0.5 * a2;
  if (area <= 1e-12) throw DegenerateInput("polygon_properties: zero area");
  PolygonProperties props;
  props.area = area;
  props.centroid = {cx / (3.0 * a2), cy / (3.0 * a2)};
  double r = 0.0;
  for (const auto& q : v) r = std::max(r, (q - props.centroid).norm());
  props.bounding_radius = r;
  return props;
}

double clip_area_aabb(const ConvexPolygon& p, double x0, double y0, double x1, double y1) {
  // Sutherland-Hodgman against the four box half-planes.
  std::vector<Point2> poly = p.vertices;
  auto clip = [&poly](auto inside, auto intersect) {
    std::vector<Point2> out;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2& a = poly[i];
      const Point2& b = poly[(i + 1) % n];
      const bool ia = inside(a), ib = inside(b);
      if (ia) {
        out.push_back(a);
        if (!ib) out.push_back(intersect(a, b));
      } else if (ib) {
        out.push_back(intersect(a, b));
      }
    }
    poly = std::move(out);
  };
  auto lerp_x = [](const Point2& a, const Point2& b, double x) {
    const double t = (x - a.x) / (b.x - a.x);
    return Point2{x, a.y + t * (b.y - a.y)};
  };
  auto lerp_y = [](const Point2& a, const Point2& b, double y) {
    const double t = (y - a.y) / (b.y - a.y);
    return Point2{a.x + t * (b.x - a.x), y};
  };
  clip([x0](const Point2& q) { return q.x >= x0; },
       [&](const Point2& a, const Point2& b) { return lerp_x(a, b, x0); });
  if (poly.empty()) return 0.0;
  clip([x1](const Point2& q) { return q.x <= x1; },
       [&](const Point2& a, const Point2& b) { return lerp_x(a, b, x1); });
  if (poly.empty()) return 0.0;
  clip([y0](const Point2& q) { return q.y >= y0; },
       [&](const Point2& a, const Point2& b) { return lerp_y(a, b, y0); });
  if (poly.empty()) return 0.0;
  clip([y1](const Point2& q) { return q.y <= y1; },
       [&](const Point2& a, const Point2& b) { return lerp_y(a, b, y1); });
  if (poly.size() < 3) return 0.0;
  double a2 = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    a2 += poly[i].cross(poly[(i + 1) % poly.size()]);
  }
  return 0.5 * a2;
}

std::vector<int> rasterize_polygon(const ConvexPolygon& p, const GridSpec& grid) {
  double minx = p.vertices[0].x, maxx = minx, miny = p.vertices[0].y, maxy = miny;
  for (const auto& v : p.vertices) {
    minx = std::min(minx, v.x);
    maxx = std::max(maxx, v.x);
    miny = std::min(miny, v.y);
    maxy = std::max(maxy, v.y);
  }
  const int ix0 = std::max(0, grid.col_of(minx));
  const int ix1 = std::min(grid.n_cols - 1, grid.col_of(maxx));
  const int iy0 = std::max(0, grid.row_of(miny));
  const int iy1 = std::min(grid.n_rows - 1, grid.row_of(maxy));
  std::vector<int> cells;
  const double res = grid.resolution;
  for (int iy = iy0; iy <= iy1; ++iy) {
    const double y0 = grid.origin.y + iy * res;
    for (int ix = ix0; ix <= ix1; ++ix) {
      const double x0 = grid.origin.x + ix * res;
      if (clip_area_aabb(p, x0, y0, x0 + res, y0 + res) > 1e-12) {
        cells.push_back(grid.flat(ix, iy));
      }
    }
  }
  return cells;
}

std::vector<int> swath_trace(const std::vector<Pose>& path, const ShipFootprint& footprint,
                             const GridSpec& grid) {
  std::vector<int> cells;
  if (path.empty()) return cells;
  const double spacing = 0.5 * grid.resolution;
  auto add_pose = [&](const Pose& pose) {
    auto c = rasterize_polygon(footprint.outline.transformed(pose), grid);
    cells.insert(cells.end(), c.begin(), c.end());
  };
  add_pose(path.front());
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Pose& a = path[i - 1];
    const Pose& b = path[i];
    const double seg = (b.position() - a.position()).norm();
    const int steps = std::max(1, static_cast<int>(std::ceil(seg / spacing)));
    const double dpsi = wrap_to_pi(b.psi - a.psi);
    for (int s = 1; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      add_pose(Pose(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.psi + t * dpsi));
    }
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

ShipFootprint make_default_footprint(double length, double width, double bow_length) {
  const double half_l = 0.5 * length;
  const double half_w = 0.5 * width;
  std::vector<Point2> verts = {
      {-half_l, -half_w},           {half_l - bow_length, -half_w}, {half_l, 0.0},
      {half_l - bow_length, half_w}, {-half_l, half_w}};
  ShipFootprint fp;
  fp.outline = convex_hull(verts);
  fp.length = length;
  fp.width = width;
  return fp;
}

}  // namespace icenav
