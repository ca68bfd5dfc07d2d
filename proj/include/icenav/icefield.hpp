#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icenav/geometry.hpp"

namespace icenav {

struct IceFloe {
  ConvexPolygon polygon;  // world frame
  double thickness = 1.2;
  double density = 900.0;
  double mass = 0.0;  // density * thickness * area
  double area = 0.0;
  Point2 centroid;
  double bounding_radius = 0.0;
  int id = -1;
};

struct IceField {
  double channel_length = 0.0;
  double channel_width = 0.0;
  std::vector<IceFloe> floes;
  double concentration = 0.0;
};

/// Shifted log-normal ice mass distribution: Y = a + b*X with
/// ln X ~ N(0, sigma^2), mass = Y * mass_unit_scale.
struct MassDistribution {
  double a = 10.21;
  double b = 0.9324;
  double sigma = 0.54;
  // Calibrated so generated floes reproduce published floe statistics
  // (mean effective width ~8.4 m, mean area ~90 m^2).
  double mass_unit_scale = 8.0e3;
};

struct FieldSpec {
  double channel_length = 400.0;
  double channel_width = 80.0;
  double target_concentration = 0.3;
  MassDistribution dist;
  double thickness = 1.2;
  double density = 900.0;
  double min_width = 4.0;   // effective width truncation, meters
  double max_width = 100.0;
};

/// Sampled floe areas (m^2) with effective width inside the truncation
/// window. Deterministic under a fixed seed.
std::vector<double> sample_floe_sizes(const MassDistribution& dist, std::uint64_t seed, int count,
                                      double density = 900.0, double thickness = 1.2,
                                      double min_width = 4.0, double max_width = 100.0);

/// Analytic CDF of the pre-truncation shifted log-normal area variable.
double floe_area_cdf(const MassDistribution& dist, double area, double density = 900.0,
                     double thickness = 1.2);

/// Procedurally generates a random ice field: circle packing with position
/// relaxation, random convex polygons inside each circle, then random
/// removal down to the target concentration.
IceField generate_field(const FieldSpec& spec, std::uint64_t seed);

/// Binary occupancy: cell = 1 iff the cell overlaps any floe polygon.
std::vector<std::uint8_t> occupancy_image(const IceField& field, const GridSpec& grid);

/// Ice-field JSON interchange: {channel: [L, W], thickness, density,
/// floes: [[[x, y], ...], ...]}.
std::string field_to_json(const IceField& field);
IceField field_from_json(const std::string& json_text);
void save_field(const IceField& field, const std::string& path);
IceField load_field(const std::string& path);

}  // namespace icenav
