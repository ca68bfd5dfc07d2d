#include "icenav/icefield.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "icenav/errors.hpp"

namespace icenav {

namespace {

IceFloe make_floe(ConvexPolygon poly, double density, double thickness, int id) {
  IceFloe f;
  f.polygon = std::move(poly);
  f.density = density;
  f.thickness = thickness;
  const auto props = polygon_properties(f.polygon);
  f.area = props.area;
  f.centroid = props.centroid;
  f.bounding_radius = props.bounding_radius;
  f.mass = density * thickness * props.area;
  f.id = id;
  return f;
}

// Random convex polygon with 5-20 vertices, unit bounding radius about the
// origin. Vertices are jittered points near the unit circle, convexified.
ConvexPolygon random_unit_polygon(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nverts(5, 20);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int attempt = 0; attempt < 64; ++attempt) {
    const int k = nverts(rng);
    std::vector<double> angles(k);
    for (auto& a : angles) a = unif(rng) * kTwoPi;
    std::sort(angles.begin(), angles.end());
    std::vector<Point2> pts;
    pts.reserve(k);
    for (double a : angles) {
      const double r = 0.85 + 0.15 * unif(rng);
      pts.push_back({r * std::cos(a), r * std::sin(a)});
    }
    try {
      ConvexPolygon hull = convex_hull(pts);
      if (hull.size() >= 5 && hull.size() <= 20) {
        // Recenter so the centroid sits at the origin, then normalize the
        // bounding radius to 1.
        const auto props = polygon_properties(hull);
        double rmax = 0.0;
        std::vector<Point2> recentered;
        for (const auto& v : hull.vertices) {
          const Point2 q = v - props.centroid;
          rmax = std::max(rmax, q.norm());
          recentered.push_back(q);
        }
        for (auto& v : recentered) v = v * (1.0 / rmax);
        ConvexPolygon out;
        out.vertices = std::move(recentered);
        return out;
      }
    } catch (const DegenerateInput&) {
    }
  }
  throw PackingFailure("random_unit_polygon: could not construct a valid shape");
}

struct Circle {
  Point2 center;
  double radius;
};

// Pairwise overlap relaxation. Returns true when all overlaps resolved.
bool relax_circles(std::vector<Circle>& circles, double length, double width, int max_iters) {
  const std::size_t n = circles.size();
  double max_r = 0.0;
  for (const auto& c : circles) max_r = std::max(max_r, c.radius);
  const double cell = 2.0 * max_r + 1e-9;
  const int gx = std::max(1, static_cast<int>(length / cell));
  const int gy = std::max(1, static_cast<int>(width / cell));
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(gx) * gy);

  for (int iter = 0; iter < max_iters; ++iter) {
    for (auto& b : buckets) b.clear();
    for (std::size_t i = 0; i < n; ++i) {
      int bx = std::clamp(static_cast<int>(circles[i].center.x / cell), 0, gx - 1);
      int by = std::clamp(static_cast<int>(circles[i].center.y / cell), 0, gy - 1);
      buckets[static_cast<std::size_t>(by) * gx + bx].push_back(static_cast<int>(i));
    }
    bool any_overlap = false;
    for (std::size_t i = 0; i < n; ++i) {
      Circle& a = circles[i];
      const int bx = std::clamp(static_cast<int>(a.center.x / cell), 0, gx - 1);
      const int by = std::clamp(static_cast<int>(a.center.y / cell), 0, gy - 1);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = bx + dx, ny = by + dy;
          if (nx < 0 || nx >= gx || ny < 0 || ny >= gy) continue;
          for (int j : buckets[static_cast<std::size_t>(ny) * gx + nx]) {
            if (static_cast<std::size_t>(j) <= i) continue;
            Circle& b = circles[static_cast<std::size_t>(j)];
            const Point2 d = b.center - a.center;
            const double dist = d.norm();
            const double need = a.radius + b.radius;
            if (dist < need) {
              any_overlap = true;
              const double push = 0.5 * (need - dist) + 1e-6;
              Point2 dir = dist > 1e-12 ? d * (1.0 / dist) : Point2{1.0, 0.0};
              a.center = a.center - dir * push;
              b.center = b.center + dir * push;
            }
          }
        }
      }
      a.center.x = std::clamp(a.center.x, a.radius, length - a.radius);
      a.center.y = std::clamp(a.center.y, a.radius, width - a.radius);
    }
    if (!any_overlap) return true;
  }
  return false;
}

// Minimum-overlap separating axis between two convex polygons. Returns a
// negative depth when already separated.
struct Overlap {
  Point2 normal;  // from a into b
  double depth = -1.0;
};

Overlap polygon_overlap(const ConvexPolygon& a, const ConvexPolygon& b) {
  Overlap best;
  best.depth = std::numeric_limits<double>::infinity();
  auto scan = [&](const ConvexPolygon& owner) {
    const auto& verts = owner.vertices;
    for (std::size_t i = 0; i < verts.size(); ++i) {
      const Point2 edge = verts[(i + 1) % verts.size()] - verts[i];
      const double len = edge.norm();
      if (len < 1e-12) continue;
      const Point2 axis{-edge.y / len, edge.x / len};
      double alo = a.vertices[0].dot(axis), ahi = alo;
      for (const auto& v : a.vertices) {
        const double d = v.dot(axis);
        alo = std::min(alo, d);
        ahi = std::max(ahi, d);
      }
      double blo = b.vertices[0].dot(axis), bhi = blo;
      for (const auto& v : b.vertices) {
        const double d = v.dot(axis);
        blo = std::min(blo, d);
        bhi = std::max(bhi, d);
      }
      const double overlap = std::min(ahi, bhi) - std::max(alo, blo);
      if (overlap <= 0) {
        best.depth = -1.0;
        return false;
      }
      if (overlap < best.depth) {
        best.depth = overlap;
        best.normal = axis;
      }
    }
    return true;
  };
  if (!scan(a) || !scan(b)) return {};
  return best;
}

// Push overlapping floes apart along their minimum separating axes until no
// pair penetrates (within tol). Used for dense fields where non-overlapping
// bounding circles cannot reach the target coverage.
bool separate_floes(std::vector<IceFloe>& floes, double length, double width, int max_iters) {
  const double tol = 1e-3;
  auto translate = [](IceFloe& f, const Point2& d) {
    for (auto& v : f.polygon.vertices) v = v + d;
    f.centroid = f.centroid + d;
  };
  for (int iter = 0; iter < max_iters; ++iter) {
    bool any = false;
    for (std::size_t i = 0; i < floes.size(); ++i) {
      for (std::size_t j = i + 1; j < floes.size(); ++j) {
        const double rr = floes[i].bounding_radius + floes[j].bounding_radius;
        const Point2 d = floes[j].centroid - floes[i].centroid;
        if (d.dot(d) > rr * rr) continue;
        const Overlap ov = polygon_overlap(floes[i].polygon, floes[j].polygon);
        if (ov.depth <= tol) continue;
        any = true;
        Point2 n = ov.normal;
        if (n.dot(d) < 0) n = n * -1.0;
        const double push = 0.5 * ov.depth + 1e-4;
        translate(floes[i], n * -push);
        translate(floes[j], n * push);
      }
      // Keep every floe fully inside the channel.
      IceFloe& f = floes[i];
      double xlo = f.polygon.vertices[0].x, xhi = xlo;
      double ylo = f.polygon.vertices[0].y, yhi = ylo;
      for (const auto& v : f.polygon.vertices) {
        xlo = std::min(xlo, v.x);
        xhi = std::max(xhi, v.x);
        ylo = std::min(ylo, v.y);
        yhi = std::max(yhi, v.y);
      }
      Point2 shift{0.0, 0.0};
      if (xlo < 0) shift.x = -xlo;
      if (xhi > length) shift.x = length - xhi;
      if (ylo < 0) shift.y = -ylo;
      if (yhi > width) shift.y = width - yhi;
      if (shift.x != 0.0 || shift.y != 0.0) translate(f, shift);
    }
    if (!any) return true;
  }
  return false;
}

}  // namespace

std::vector<double> sample_floe_sizes(const MassDistribution& dist, std::uint64_t seed, int count,
                                      double density, double thickness, double min_width,
                                      double max_width) {
  if (count < 1) throw ConfigError("sample_floe_sizes: count must be >= 1");
  if (!(dist.b > 0) || !(dist.sigma > 0) || !(dist.mass_unit_scale > 0)) {
    throw ConfigError("sample_floe_sizes: distribution parameters must be positive");
  }
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> lognorm(0.0, dist.sigma);
  std::vector<double> areas;
  areas.reserve(count);
  const double per_mass = 1.0 / (density * thickness);
  long guard = 0;
  while (static_cast<int>(areas.size()) < count) {
    if (++guard > 1000L * count) throw ConfigError("sample_floe_sizes: rejection loop stalled");
    const double mass = (dist.a + dist.b * lognorm(rng)) * dist.mass_unit_scale;
    const double area = mass * per_mass;
    const double w = std::sqrt(area);
    if (w >= min_width && w <= max_width) areas.push_back(area);
  }
  return areas;
}

double floe_area_cdf(const MassDistribution& dist, double area, double density, double thickness) {
  const double mass = area * density * thickness;
  const double x = (mass / dist.mass_unit_scale - dist.a) / dist.b;
  if (x <= 0.0) return 0.0;
  return 0.5 * std::erfc(-std::log(x) / (dist.sigma * std::sqrt(2.0)));
}

IceField generate_field(const FieldSpec& spec, std::uint64_t seed) {
  if (!(spec.target_concentration >= 0.0) || spec.target_concentration > 0.6) {
    throw ConfigError("generate_field: target concentration must be in [0, 0.6]");
  }
  IceField field;
  field.channel_length = spec.channel_length;
  field.channel_width = spec.channel_width;
  if (spec.target_concentration == 0.0) return field;

  const double channel_area = spec.channel_length * spec.channel_width;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  for (int attempt = 0; attempt < 8; ++attempt) {
    // Sample shapes until the polygons can overfill the target coverage.
    struct Candidate {
      ConvexPolygon unit_shape;  // bounding radius 1, centroid at origin
      double area;               // target polygon area, m^2
      double circle_radius;      // scaled bounding radius
    };
    std::vector<Candidate> cands;
    double total_area = 0.0;
    const double overfill = (spec.target_concentration + 0.03) * channel_area;
    while (total_area < overfill) {
      auto areas = sample_floe_sizes(spec.dist, rng(), 8, spec.density, spec.thickness,
                                     spec.min_width, spec.max_width);
      for (double a : areas) {
        Candidate c;
        c.unit_shape = random_unit_polygon(rng);
        const double unit_area = polygon_properties(c.unit_shape).area;
        const double scale = std::sqrt(a / unit_area);
        c.area = a;
        c.circle_radius = scale;  // unit bounding radius scaled
        if (2.0 * c.circle_radius > spec.channel_width) continue;  // cannot fit
        cands.push_back(std::move(c));
        total_area += a;
        if (total_area >= overfill) break;
      }
    }
    // Largest first improves relaxation convergence.
    std::sort(cands.begin(), cands.end(),
              [](const Candidate& a, const Candidate& b) { return a.circle_radius > b.circle_radius; });

    std::vector<Circle> circles;
    circles.reserve(cands.size());
    for (const auto& c : cands) {
      const double x = c.circle_radius + unif(rng) * (spec.channel_length - 2 * c.circle_radius);
      const double y = c.circle_radius + unif(rng) * (spec.channel_width - 2 * c.circle_radius);
      circles.push_back({{x, y}, c.circle_radius});
    }
    // Dense targets exceed the jamming coverage of non-overlapping bounding
    // circles (polygons fill only ~70% of their circles); fall back to
    // relaxing shrunken circles and separating the polygons directly.
    bool needs_polygon_separation = false;
    if (!relax_circles(circles, spec.channel_length, spec.channel_width, 4000)) {
      needs_polygon_separation = true;
      for (auto& c : circles) c.radius *= 0.78;
      if (!relax_circles(circles, spec.channel_length, spec.channel_width, 4000)) continue;
      for (auto& c : circles) c.radius /= 0.78;
    }

    // Instantiate polygons at the packed circle centers.
    std::vector<IceFloe> floes;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      const double scale = std::sqrt(cands[i].area / polygon_properties(cands[i].unit_shape).area);
      std::vector<Point2> verts;
      for (const auto& v : cands[i].unit_shape.vertices) {
        verts.push_back(circles[i].center + v * scale);
      }
      ConvexPolygon poly;
      poly.vertices = std::move(verts);
      floes.push_back(make_floe(std::move(poly), spec.density, spec.thickness,
                                static_cast<int>(i)));
    }
    if (needs_polygon_separation &&
        !separate_floes(floes, spec.channel_length, spec.channel_width, 1500))
      continue;

    // Random removal down to the target concentration.
    double conc = 0.0;
    for (const auto& f : floes) conc += f.area / channel_area;
    const double tol = 0.01;
    while (conc > spec.target_concentration) {
      std::vector<int> removable;
      for (std::size_t i = 0; i < floes.size(); ++i) {
        if (conc - floes[i].area / channel_area >= spec.target_concentration - tol) {
          removable.push_back(static_cast<int>(i));
        }
      }
      if (removable.empty()) break;
      const int pick = removable[static_cast<std::size_t>(unif(rng) * removable.size()) %
                                 removable.size()];
      conc -= floes[static_cast<std::size_t>(pick)].area / channel_area;
      floes.erase(floes.begin() + pick);
    }
    if (std::fabs(conc - spec.target_concentration) > tol) continue;

    for (std::size_t i = 0; i < floes.size(); ++i) floes[i].id = static_cast<int>(i);
    field.floes = std::move(floes);
    field.concentration = conc;
    return field;
  }
  throw PackingFailure("generate_field: packing did not reach the target concentration");
}

std::vector<std::uint8_t> occupancy_image(const IceField& field, const GridSpec& grid) {
  std::vector<std::uint8_t> img(static_cast<std::size_t>(grid.cell_count()), 0);
  for (const auto& floe : field.floes) {
    for (int c : rasterize_polygon(floe.polygon, grid)) img[static_cast<std::size_t>(c)] = 1;
  }
  return img;
}

std::string field_to_json(const IceField& field) {
  nlohmann::json j;
  j["channel"] = {field.channel_length, field.channel_width};
  j["concentration"] = field.concentration;
  if (!field.floes.empty()) {
    j["thickness"] = field.floes.front().thickness;
    j["density"] = field.floes.front().density;
  } else {
    j["thickness"] = 1.2;
    j["density"] = 900.0;
  }
  nlohmann::json floes = nlohmann::json::array();
  for (const auto& f : field.floes) {
    nlohmann::json poly = nlohmann::json::array();
    for (const auto& v : f.polygon.vertices) poly.push_back({v.x, v.y});
    floes.push_back(poly);
  }
  j["floes"] = std::move(floes);
  return j.dump(2);
}

IceField field_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  IceField field;
  field.channel_length = j.at("channel").at(0).get<double>();
  field.channel_width = j.at("channel").at(1).get<double>();
  const double thickness = j.value("thickness", 1.2);
  const double density = j.value("density", 900.0);
  int id = 0;
  double total_area = 0.0;
  for (const auto& poly : j.at("floes")) {
    std::vector<Point2> verts;
    for (const auto& v : poly) verts.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
    ConvexPolygon p;
    p.vertices = std::move(verts);
    auto floe = make_floe(std::move(p), density, thickness, id++);
    total_area += floe.area;
    field.floes.push_back(std::move(floe));
  }
  field.concentration =
      j.value("concentration", total_area / (field.channel_length * field.channel_width));
  return field;
}

void save_field(const IceField& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("save_field: cannot open " + path);
  out << field_to_json(field);
}

IceField load_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_field: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return field_from_json(text);
}

}  // namespace icenav
