#include "icenav/physics.hpp"

#include <algorithm>
#include <cmath>

#include "icenav/errors.hpp"

namespace icenav {

namespace {

Point2 perp(const Point2& v) { return {-v.y, v.x}; }

Point2 rotate(const Point2& v, double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

struct Projection {
  double lo, hi;
};

Projection project(const ConvexPolygon& poly, const Point2& axis) {
  double lo = poly.vertices[0].dot(axis), hi = lo;
  for (const auto& v : poly.vertices) {
    const double d = v.dot(axis);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return {lo, hi};
}

struct SatResult {
  bool hit = false;
  Point2 normal;  // from A into B
  double depth = 0.0;
  Point2 point;
};

SatResult sat_contact(const ConvexPolygon& a, const ConvexPolygon& b) {
  SatResult best;
  best.depth = std::numeric_limits<double>::infinity();
  bool axis_from_a = true;
  auto scan = [&](const ConvexPolygon& owner, bool owner_is_a) {
    const auto& verts = owner.vertices;
    for (std::size_t i = 0; i < verts.size(); ++i) {
      Point2 edge = verts[(i + 1) % verts.size()] - verts[i];
      const double len = edge.norm();
      if (len < 1e-12) continue;
      const Point2 axis = perp(edge * (1.0 / len));
      const Projection pa = project(a, axis), pb = project(b, axis);
      const double overlap = std::min(pa.hi, pb.hi) - std::max(pa.lo, pb.lo);
      if (overlap <= 0) {
        best.hit = false;
        best.depth = -1;
        return false;
      }
      if (overlap < best.depth) {
        best.depth = overlap;
        best.normal = axis;
        axis_from_a = owner_is_a;
      }
    }
    return true;
  };
  if (!scan(a, true) || !scan(b, false)) return SatResult{};

  const Point2 ca = polygon_properties(a).centroid;
  const Point2 cb = polygon_properties(b).centroid;
  if (best.normal.dot(cb - ca) < 0) best.normal = best.normal * -1.0;

  // Single deepest point: the incident polygon's support into the other;
  // ties (flat-on-flat) average to the contact-segment midpoint so a central
  // strike carries no spurious torque.
  const bool use_b = axis_from_a;
  const auto& inc = use_b ? b.vertices : a.vertices;
  const double sign = use_b ? 1.0 : -1.0;
  double ext = std::numeric_limits<double>::infinity();
  for (const auto& v : inc) ext = std::min(ext, sign * v.dot(best.normal));
  Point2 sum;
  int ties = 0;
  for (const auto& v : inc) {
    if (sign * v.dot(best.normal) <= ext + 1e-6) {
      sum = sum + v;
      ++ties;
    }
  }
  best.point = sum * (1.0 / ties);
  best.hit = true;
  return best;
}

}  // namespace

ConvexPolygon FloeBody::world_poly() const {
  return local_poly.transformed(Pose(position.x, position.y, orientation));
}

double polygon_second_moment(const ConvexPolygon& poly) {
  const auto& v = poly.vertices;
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point2& p = v[i];
    const Point2& q = v[(i + 1) % v.size()];
    acc += p.cross(q) * (p.dot(p) + p.dot(q) + q.dot(q));
  }
  return acc / 12.0;
}

SimWorld make_world(const IceField& field, const ShipFootprint& footprint, double ship_mass,
                    double dt_sim) {
  if (dt_sim <= 0) throw ConfigError("make_world: dt_sim must be positive");
  SimWorld world;
  world.dt_sim = dt_sim;
  world.y_min = 0.0;
  world.y_max = field.channel_width;
  world.ship_mass = ship_mass;
  world.ship_footprint = footprint;
  for (const auto& floe : field.floes) {
    FloeBody body;
    body.id = floe.id;
    body.position = floe.centroid;
    std::vector<Point2> local;
    for (const auto& v : floe.polygon.vertices) local.push_back(v - floe.centroid);
    body.local_poly = ConvexPolygon(std::move(local));
    body.mass = floe.mass;
    body.inertia = floe.density * floe.thickness * polygon_second_moment(body.local_poly);
    body.thickness = floe.thickness;
    body.density = floe.density;
    body.bounding_radius = floe.bounding_radius;
    if (body.mass <= 0 || body.inertia <= 0) throw DegenerateInput("make_world: bad floe body");
    world.floes.push_back(std::move(body));
  }
  return world;
}

std::vector<Contact> detect_contacts(const SimWorld& world) {
  std::vector<Contact> contacts;
  const int n = static_cast<int>(world.floes.size());
  std::vector<ConvexPolygon> polys(n);
  for (int i = 0; i < n; ++i) polys[i] = world.floes[i].world_poly();

  double ship_radius = 0.0;
  for (const auto& v : world.ship_footprint.outline.vertices)
    ship_radius = std::max(ship_radius, v.norm());
  const ConvexPolygon ship_poly = world.ship_footprint.outline.transformed(world.ship_pose);
  const Point2 ship_pos = world.ship_pose.position();

  for (int i = 0; i < n; ++i) {
    const FloeBody& fi = world.floes[i];
    // Ship-floe.
    if ((fi.position - ship_pos).norm() <= fi.bounding_radius + ship_radius) {
      const SatResult s = sat_contact(ship_poly, polys[i]);
      if (s.hit) contacts.push_back({Contact::kShip, i, s.point, s.normal, s.depth});
    }
    // Floe-floe.
    for (int j = i + 1; j < n; ++j) {
      const FloeBody& fj = world.floes[j];
      if ((fi.position - fj.position).norm() > fi.bounding_radius + fj.bounding_radius) continue;
      const SatResult s = sat_contact(polys[i], polys[j]);
      if (s.hit) contacts.push_back({i, j, s.point, s.normal, s.depth});
    }
    // Walls: deepest vertex past each wall.
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    Point2 plo, phi;
    for (const auto& v : polys[i].vertices) {
      if (v.y < lo) {
        lo = v.y;
        plo = v;
      }
      if (v.y > hi) {
        hi = v.y;
        phi = v;
      }
    }
    if (lo < world.y_min)
      contacts.push_back({i, Contact::kWallLow, plo, {0.0, -1.0}, world.y_min - lo});
    if (hi > world.y_max)
      contacts.push_back({i, Contact::kWallHigh, phi, {0.0, 1.0}, hi - world.y_max});
  }
  return contacts;
}

void apply_drag(FloeBody& floe, double dt, const MaterialParams& materials) {
  const double speed = floe.velocity.norm();
  if (speed > 1e-12) {
    const Point2 t = perp(floe.velocity) * (1.0 / speed);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& v : floe.world_poly().vertices) {
      const double d = v.dot(t);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    const double a_proj = (floe.density / materials.rho_water) * floe.thickness * (hi - lo);
    const double k = 0.5 * materials.rho_water * materials.drag_coeff * a_proj / floe.mass;
    // v' = -k v^2 along a frozen direction integrates to v/(1 + k v dt).
    floe.velocity = floe.velocity * (1.0 / (1.0 + k * speed * dt));
  }
  floe.omega *= std::max(0.0, 1.0 - materials.angular_decay * dt / 0.005);
}

StepResult step_world(SimWorld& world, const Pose& ship_pose_end, const Point2& ship_velocity,
                      double ship_yaw_rate, double dt_ctrl) {
  const double steps_f = dt_ctrl / world.dt_sim;
  const int steps = static_cast<int>(std::lround(steps_f));
  if (steps < 1 || std::fabs(steps_f - steps) > 1e-9)
    throw ConfigError("step_world: dt_ctrl must be a multiple of dt_sim");

  const Pose pose0 = world.ship_pose;
  const double dpsi = wrap_to_pi(ship_pose_end.psi - pose0.psi);
  const double dt = world.dt_sim;
  const MaterialParams& mat = world.materials;
  StepResult result;

  for (int s = 0; s < steps; ++s) {
    const double f = static_cast<double>(s) / steps;
    world.ship_pose = Pose(pose0.x + f * (ship_pose_end.x - pose0.x),
                           pose0.y + f * (ship_pose_end.y - pose0.y), pose0.psi + f * dpsi);
    const Point2 ship_pos = world.ship_pose.position();

    auto contacts = detect_contacts(world);

    auto inv_mass = [&](int idx) { return idx >= 0 ? 1.0 / world.floes[idx].mass : 0.0; };
    auto inv_inertia = [&](int idx) { return idx >= 0 ? 1.0 / world.floes[idx].inertia : 0.0; };
    auto body_center = [&](int idx) {
      return idx >= 0 ? world.floes[idx].position : ship_pos;  // walls never queried
    };
    auto vel_at = [&](int idx, const Point2& p) -> Point2 {
      if (idx >= 0) {
        const FloeBody& b = world.floes[idx];
        return b.velocity + perp(p - b.position) * b.omega;
      }
      if (idx == Contact::kShip) return ship_velocity + perp(p - ship_pos) * ship_yaw_rate;
      return {0.0, 0.0};
    };

    struct Accum {
      double vn0 = 0.0;
      double pn = 0.0, pt = 0.0;
      Point2 v_pre;
      double omega_pre = 0.0;
    };
    std::vector<Accum> acc(contacts.size());
    for (std::size_t c = 0; c < contacts.size(); ++c) {
      const Contact& ct = contacts[c];
      acc[c].vn0 = (vel_at(ct.b, ct.point) - vel_at(ct.a, ct.point)).dot(ct.normal);
      const int floe = ct.a >= 0 ? ct.a : ct.b;
      acc[c].v_pre = world.floes[floe].velocity;
      acc[c].omega_pre = world.floes[floe].omega;
    }

    for (int iter = 0; iter < 4; ++iter) {
      for (std::size_t c = 0; c < contacts.size(); ++c) {
        const Contact& ct = contacts[c];
        const Point2 n = ct.normal;
        const Point2 ra = ct.point - body_center(ct.a);
        const Point2 rb = ct.point - body_center(ct.b);
        const double cra = ra.cross(n), crb = rb.cross(n);
        const double kn = inv_mass(ct.a) + inv_mass(ct.b) + inv_inertia(ct.a) * cra * cra +
                          inv_inertia(ct.b) * crb * crb;
        if (kn <= 0) continue;
        auto apply = [&](int idx, const Point2& imp, const Point2& r) {
          if (idx < 0) return;
          FloeBody& b = world.floes[idx];
          b.velocity = b.velocity + imp * (1.0 / b.mass);
          b.omega += r.cross(imp) / b.inertia;
        };
        const double target = -mat.restitution * std::min(acc[c].vn0, 0.0);
        const double vn = (vel_at(ct.b, ct.point) - vel_at(ct.a, ct.point)).dot(n);
        double d_pn = -(vn - target) / kn;
        const double pn_new = std::max(acc[c].pn + d_pn, 0.0);
        d_pn = pn_new - acc[c].pn;
        acc[c].pn = pn_new;
        apply(ct.b, n * d_pn, rb);
        apply(ct.a, n * -d_pn, ra);

        const Point2 t = perp(n);
        const double cta = ra.cross(t), ctb = rb.cross(t);
        const double kt = inv_mass(ct.a) + inv_mass(ct.b) + inv_inertia(ct.a) * cta * cta +
                          inv_inertia(ct.b) * ctb * ctb;
        if (kt <= 0) continue;
        const double mu = (ct.a == Contact::kShip || ct.b == Contact::kShip) ? mat.mu_ship_ice
                                                                             : mat.mu_ice_ice;
        const double vt = (vel_at(ct.b, ct.point) - vel_at(ct.a, ct.point)).dot(t);
        double d_pt = -vt / kt;
        const double cap = mu * acc[c].pn;
        const double pt_new = std::clamp(acc[c].pt + d_pt, -cap, cap);
        d_pt = pt_new - acc[c].pt;
        acc[c].pt = pt_new;
        apply(ct.b, t * d_pt, rb);
        apply(ct.a, t * -d_pt, ra);
      }
    }

    // Ship-impact bookkeeping before drag touches the floe velocities.
    for (std::size_t c = 0; c < contacts.size(); ++c) {
      const Contact& ct = contacts[c];
      if (ct.a != Contact::kShip || acc[c].pn <= 0) continue;
      const FloeBody& floe = world.floes[ct.b];
      CollisionEvent ev;
      ev.time = world.time;
      ev.floe_id = floe.id;
      ev.impulse = acc[c].pn;
      ev.impulse_vec = ct.normal * acc[c].pn + perp(ct.normal) * acc[c].pt;
      ev.contact_body = rotate(ct.point - ship_pos, -world.ship_pose.psi);
      ev.normal = ct.normal;
      ev.ship_psi = world.ship_pose.psi;
      ev.floe_mass = floe.mass;
      ev.v_pre = acc[c].v_pre;
      ev.v_post = floe.velocity;
      ev.omega_pre = acc[c].omega_pre;
      ev.omega_post = floe.omega;
      const double m_eq = world.ship_mass * floe.mass / (world.ship_mass + floe.mass);
      const double v_eq = std::min(acc[c].vn0, 0.0);
      ev.dk_sys = -0.5 * m_eq * v_eq * v_eq;
      ev.dk_ice = 0.5 * floe.mass * (ev.v_post.dot(ev.v_post) - ev.v_pre.dot(ev.v_pre)) +
                  0.5 * floe.inertia * (ev.omega_post * ev.omega_post - ev.omega_pre * ev.omega_pre);
      result.events.push_back(ev);
    }

    for (auto& floe : world.floes) {
      apply_drag(floe, dt, mat);
      floe.position = floe.position + floe.velocity * dt;
      floe.orientation = wrap_to_2pi(floe.orientation + floe.omega * dt);
    }

    // Positional correction (velocity-free), two passes over fresh manifolds.
    for (int pass = 0; pass < 2; ++pass) {
      const double slop = 0.005, fraction = 0.8;
      for (const Contact& ct : detect_contacts(world)) {
        const double pen = ct.depth - slop;
        if (pen <= 0) continue;
        const double wa = inv_mass(ct.a), wb = inv_mass(ct.b);
        if (wa + wb <= 0) continue;
        const bool hard = ct.a < 0 || ct.b < 0;  // ship or wall: push the floe fully out
        const Point2 shift = ct.normal * ((hard ? 1.0 : fraction) * pen / (wa + wb));
        if (ct.a >= 0) world.floes[ct.a].position = world.floes[ct.a].position - shift * wa;
        if (ct.b >= 0) world.floes[ct.b].position = world.floes[ct.b].position + shift * wb;
      }
    }

    world.time += dt;
  }

  world.ship_pose = ship_pose_end;

  // tau_env is exactly the event sum (bookkeeping closure), each impulse
  // mapped through the ship frame it was applied in.
  for (const auto& ev : result.events) {
    const Point2 f_world = ev.impulse_vec * (-1.0 / world.dt_sim);  // reaction on the ship
    const Point2 f_body = rotate(f_world, -ev.ship_psi);
    result.tau_env_x += f_body.x;
    result.tau_env_y += f_body.y;
    result.tau_env_n += ev.contact_body.cross(f_body);
  }
  return result;
}

}  // namespace icenav
