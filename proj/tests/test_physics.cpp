#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <random>
#include <set>

#include "icenav/costmap.hpp"
#include "icenav/errors.hpp"
#include "icenav/physics.hpp"

using namespace icenav;

namespace {

IceFloe make_floe(std::vector<Point2> verts, int id) {
  IceFloe f;
  f.polygon = convex_hull(std::move(verts));
  const auto props = polygon_properties(f.polygon);
  f.area = props.area;
  f.centroid = props.centroid;
  f.bounding_radius = props.bounding_radius;
  f.thickness = 1.2;
  f.density = 900.0;
  f.mass = f.density * f.thickness * f.area;
  f.id = id;
  return f;
}

IceFloe square_floe(double cx, double cy, double half, int id) {
  return make_floe({{cx - half, cy - half},
                    {cx + half, cy - half},
                    {cx + half, cy + half},
                    {cx - half, cy + half}},
                   id);
}

ShipFootprint box_ship(double length, double width) {
  ShipFootprint fp;
  fp.outline = convex_hull({{-length / 2, -width / 2},
                            {length / 2, -width / 2},
                            {length / 2, width / 2},
                            {-length / 2, width / 2}});
  fp.length = length;
  fp.width = width;
  return fp;
}

IceField wide_field(std::vector<IceFloe> floes, double width = 400) {
  IceField field;
  field.channel_length = 1000;
  field.channel_width = width;
  field.floes = std::move(floes);
  return field;
}

// Exact convex-polygon overlap oracle: vertex containment or proper edge
// crossing, independent of the SAT implementation.
bool polys_intersect(const ConvexPolygon& a, const ConvexPolygon& b) {
  for (const auto& v : a.vertices)
    if (b.contains(v, -1e-12)) return true;
  for (const auto& v : b.vertices)
    if (a.contains(v, -1e-12)) return true;
  auto cross_seg = [](const Point2& p, const Point2& q, const Point2& r, const Point2& s) {
    const double d1 = (q - p).cross(r - p), d2 = (q - p).cross(s - p);
    const double d3 = (s - r).cross(p - r), d4 = (s - r).cross(q - r);
    return d1 * d2 < 0 && d3 * d4 < 0;
  };
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      if (cross_seg(a.vertices[i], a.vertices[(i + 1) % a.size()], b.vertices[j],
                    b.vertices[(j + 1) % b.size()]))
        return true;
  return false;
}

}  // namespace

TEST_CASE("polygon second moment: square about centroid") {
  const ConvexPolygon sq = convex_hull({{-2, -2}, {2, -2}, {2, 2}, {-2, 2}});
  // I = a^4/6 per unit density for side a about the center.
  CHECK(polygon_second_moment(sq) == doctest::Approx(256.0 / 6).epsilon(1e-12));
}

TEST_CASE("broadphase rejects well-separated floes") {
  auto world =
      make_world(wide_field({square_floe(100, 200, 2, 0), square_floe(110, 200, 2, 1)}),
                 box_ship(20, 6), 6e6);
  world.ship_pose = Pose(500, 200, 0);
  CHECK(detect_contacts(world).empty());
}

TEST_CASE("narrowphase: unit squares overlapping along x") {
  auto world =
      make_world(wide_field({square_floe(100, 200, 0.5, 0), square_floe(100.9, 200, 0.5, 1)}),
                 box_ship(20, 6), 6e6);
  world.ship_pose = Pose(500, 200, 0);
  const auto contacts = detect_contacts(world);
  REQUIRE(contacts.size() == 1);
  CHECK(std::fabs(std::fabs(contacts[0].normal.x) - 1.0) < 1e-12);
  CHECK(std::fabs(contacts[0].normal.y) < 1e-12);
  CHECK(contacts[0].depth == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("contact set matches the exact all-pairs intersection oracle") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> upos(60, 340), usz(2, 9), uang(0, kTwoPi);
  std::vector<IceFloe> floes;
  for (int i = 0; i < 50; ++i) {
    std::vector<Point2> pts;
    const double cx = upos(rng), cy = upos(rng);
    for (int k = 0; k < 6; ++k) {
      const double r = usz(rng), a = uang(rng);
      pts.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
    }
    floes.push_back(make_floe(std::move(pts), i));
  }
  auto world = make_world(wide_field(floes), box_ship(20, 6), 6e6);
  world.ship_pose = Pose(900, 200, 0);
  std::set<std::pair<int, int>> found;
  for (const auto& c : detect_contacts(world))
    if (c.a >= 0 && c.b >= 0) found.insert({c.a, c.b});
  std::set<std::pair<int, int>> expect;
  for (int i = 0; i < 50; ++i)
    for (int j = i + 1; j < 50; ++j)
      if (polys_intersect(floes[i].polygon, floes[j].polygon)) expect.insert({i, j});
  CHECK(found == expect);
}

TEST_CASE("drag: zero velocity is a fixed point, otherwise opposes motion") {
  auto world = make_world(wide_field({square_floe(100, 200, 5, 0)}), box_ship(20, 6), 6e6);
  FloeBody floe = world.floes[0];
  apply_drag(floe, 0.005, world.materials);
  CHECK(floe.velocity.norm() == 0.0);
  floe.velocity = {1.3, -0.4};
  const Point2 before = floe.velocity;
  apply_drag(floe, 0.005, world.materials);
  CHECK((floe.velocity - before).dot(before) < 0);
  CHECK(floe.velocity.norm() < before.norm());
  // Direction is preserved (pure opposing drag).
  CHECK(floe.velocity.cross(before) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("drag: quadratic decay matches v0/(1+k v0 t) over 60 s") {
  auto world = make_world(wide_field({square_floe(100, 200, 5, 0)}), box_ship(20, 6), 6e6);
  FloeBody floe = world.floes[0];
  floe.velocity = {1.0, 0.0};
  const double a_proj = (900.0 / 1025.0) * 1.2 * 10.0;
  const double k = 0.5 * 1025.0 * 1.0 * a_proj / floe.mass;
  for (int i = 0; i < 12000; ++i) apply_drag(floe, 0.005, world.materials);
  const double expect = 1.0 / (1.0 + k * 1.0 * 60.0);
  CHECK(std::fabs(floe.velocity.x - expect) <= 0.01 * expect);
}

TEST_CASE("angular decay: 3 percent per reference substep") {
  auto world = make_world(wide_field({square_floe(100, 200, 5, 0)}), box_ship(20, 6), 6e6);
  FloeBody floe = world.floes[0];
  floe.omega = 0.2;
  apply_drag(floe, 0.005, world.materials);
  CHECK(floe.omega == doctest::Approx(0.2 * 0.97).epsilon(1e-12));
}

TEST_CASE("step_world: open water") {
  auto world = make_world(wide_field({square_floe(300, 350, 5, 0)}), box_ship(20, 6), 6e6);
  world.ship_pose = Pose(50, 100, 0);
  const auto r = step_world(world, Pose(50.04, 100, 0), {2, 0}, 0, 0.02);
  CHECK(r.events.empty());
  CHECK(r.tau_env_x == 0.0);
  CHECK(r.tau_env_y == 0.0);
  CHECK(r.tau_env_n == 0.0);
}

TEST_CASE("step_world rejects dt_ctrl not a multiple of dt_sim") {
  auto world = make_world(wide_field({}), box_ship(20, 6), 6e6);
  CHECK_THROWS_AS(step_world(world, Pose(0, 0, 0), {0, 0}, 0, 0.007), ConfigError);
}

TEST_CASE("head-on central strike: restitution kick, opposing surge, closure") {
  auto world = make_world(wide_field({square_floe(30, 200, 5, 7)}), box_ship(20, 6), 6e6);
  world.ship_pose = Pose(10, 200, 0);
  const double m = world.floes[0].mass;
  Pose pose = world.ship_pose;
  StepResult hit;
  for (int i = 0; i < 300 && hit.events.empty(); ++i) {
    pose = Pose(pose.x + 2 * 0.02, 200, 0);
    hit = step_world(world, pose, {2, 0}, 0, 0.02);
  }
  REQUIRE(!hit.events.empty());
  const CollisionEvent& ev = hit.events.front();
  CHECK(ev.floe_id == 7);
  CHECK(ev.v_post.x == doctest::Approx(2.2).epsilon(1e-9));
  CHECK(std::fabs(ev.v_post.y) < 1e-9);
  CHECK(std::fabs(ev.omega_post) < 1e-9);
  CHECK(ev.impulse == doctest::Approx(m * 2.2).epsilon(1e-9));
  CHECK(hit.tau_env_x < 0);
  CHECK(std::fabs(hit.tau_env_y) < 1e-6 * std::fabs(hit.tau_env_x));
  CHECK(std::fabs(hit.tau_env_n) < 1e-6 * std::fabs(hit.tau_env_x) * 10);
  // Bookkeeping closure: recompute tau_env from the event log, bit-exact.
  double fx = 0, fy = 0, fn = 0;
  for (const auto& e : hit.events) {
    const double c = std::cos(-e.ship_psi), s = std::sin(-e.ship_psi);
    const Point2 fw = e.impulse_vec * (-1.0 / world.dt_sim);
    const Point2 fb{c * fw.x - s * fw.y, s * fw.x + c * fw.y};
    fx += fb.x;
    fy += fb.y;
    fn += e.contact_body.cross(fb);
  }
  CHECK(fx == hit.tau_env_x);
  CHECK(fy == hit.tau_env_y);
  CHECK(fn == hit.tau_env_n);
}

TEST_CASE("logged energies reproduce the disk-model closed form on matched geometry") {
  auto world = make_world(wide_field({square_floe(30, 200, 5, 0)}), box_ship(20, 6), 6e6);
  world.materials.restitution = 0.0;  // the disk model is perfectly inelastic
  world.ship_pose = Pose(10, 200, 0);
  const double m_ice = world.floes[0].mass;
  Pose pose = world.ship_pose;
  StepResult hit;
  for (int i = 0; i < 300 && hit.events.empty(); ++i) {
    pose = Pose(pose.x + 2 * 0.02, 200, 0);
    hit = step_world(world, pose, {2, 0}, 0, 0.02);
  }
  REQUIRE(!hit.events.empty());
  const CollisionEvent& ev = hit.events.front();
  const double dk_ship = std::fabs(ev.dk_sys - ev.dk_ice);
  const double closed = ke_loss(0.0, world.floes[0].bounding_radius, m_ice, 6e6, 2.0);
  CHECK(std::fabs(dk_ship - closed) <= 0.10 * closed);
}

TEST_CASE("symmetric inelastic head-on: both floes stop") {
  auto world =
      make_world(wide_field({square_floe(95, 200, 4, 0), square_floe(105, 200, 4, 1)}),
                 box_ship(20, 6), 6e6);
  world.materials.restitution = 0.0;
  world.materials.drag_coeff = 0.0;
  world.materials.angular_decay = 0.0;
  world.ship_pose = Pose(900, 200, 0);
  world.floes[0].velocity = {1, 0};
  world.floes[1].velocity = {-1, 0};
  for (int i = 0; i < 200; ++i) step_world(world, world.ship_pose, {0, 0}, 0, 0.02);
  CHECK(world.floes[0].velocity.norm() < 1e-9);
  CHECK(world.floes[1].velocity.norm() < 1e-9);
}

TEST_CASE("random floe-floe collisions: momentum exact, KE dissipates") {
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> uv(-2, 2), usz(2, 6), uoff(-3, 3);
  for (int trial = 0; trial < 30; ++trial) {
    const double h0 = usz(rng), h1 = usz(rng);
    auto world = make_world(
        wide_field({square_floe(100, 200 + uoff(rng), h0, 0),
                    square_floe(100 + h0 + h1 + 1.5, 200 + uoff(rng), h1, 1)}),
        box_ship(20, 6), 6e6);
    world.materials.drag_coeff = 0.0;
    world.materials.angular_decay = 0.0;
    world.ship_pose = Pose(900, 200, 0);
    world.floes[0].velocity = {std::fabs(uv(rng)) + 0.5, uv(rng) * 0.2};
    world.floes[1].velocity = {-std::fabs(uv(rng)) - 0.5, uv(rng) * 0.2};
    world.floes[0].omega = uv(rng) * 0.05;
    world.floes[1].omega = uv(rng) * 0.05;
    Point2 p0 = world.floes[0].velocity * world.floes[0].mass +
                world.floes[1].velocity * world.floes[1].mass;
    auto ke = [&] {
      double k = 0;
      for (const auto& f : world.floes)
        k += 0.5 * f.mass * f.velocity.dot(f.velocity) + 0.5 * f.inertia * f.omega * f.omega;
      return k;
    };
    const double ke0 = ke();
    for (int i = 0; i < 100; ++i) step_world(world, world.ship_pose, {0, 0}, 0, 0.02);
    Point2 p1 = world.floes[0].velocity * world.floes[0].mass +
                world.floes[1].velocity * world.floes[1].mass;
    CHECK((p1 - p0).norm() <= 1e-9 * std::max(1.0, p0.norm()));
    CHECK(ke() <= ke0 * (1 + 1e-9));
  }
}

TEST_CASE("floes never escape the channel walls") {
  IceField field = wide_field({square_floe(100, 6, 4, 0)}, 40);
  auto world = make_world(field, box_ship(20, 6), 6e6);
  world.ship_pose = Pose(900, 20, 0);
  world.floes[0].velocity = {0, -2};
  for (int i = 0; i < 500; ++i) {
    step_world(world, world.ship_pose, {0, 0}, 0, 0.02);
    double lo = 1e300, hi = -1e300;
    for (const auto& v : world.floes[0].world_poly().vertices) {
      lo = std::min(lo, v.y);
      hi = std::max(hi, v.y);
    }
    CHECK(lo >= -0.01);
    CHECK(hi <= 40.01);
  }
}

TEST_CASE("determinism: identical inputs give bit-identical trajectories") {
  auto run = [] {
    FieldSpec spec;
    spec.target_concentration = 0.4;
    const IceField field = generate_field(spec, 1234);
    auto world = make_world(field, make_default_footprint(), 6e6);
    world.ship_pose = Pose(-50, 40, 0);
    Pose pose = world.ship_pose;
    std::vector<double> log;
    for (int i = 0; i < 400; ++i) {
      pose = Pose(pose.x + 2 * 0.02, 40, 0);
      const auto r = step_world(world, pose, {2, 0}, 0, 0.02);
      log.push_back(r.tau_env_x);
      for (const auto& f : world.floes) {
        log.push_back(f.position.x);
        log.push_back(f.position.y);
        log.push_back(f.orientation);
      }
    }
    return log;
  };
  const auto a = run(), b = run();
  REQUIRE(a.size() == b.size());
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}
