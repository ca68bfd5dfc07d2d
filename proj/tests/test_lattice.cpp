#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>
#include <queue>
#include <random>

#include "icenav/errors.hpp"
#include "icenav/lattice.hpp"

using namespace icenav;

namespace {

ShipFootprint small_ship() {
  ShipFootprint fp;
  fp.outline = convex_hull({{-4, -1.5}, {4, -1.5}, {4, 1.5}, {-4, 1.5}});
  fp.length = 8;
  fp.width = 3;
  return fp;
}

LatticeSpec small_spec() {
  LatticeSpec spec;
  spec.spacing = 10;
  spec.n_headings = 8;
  spec.r_min = 30;
  return spec;
}

const ControlSet& small_control_set() {
  static ControlSet cs = generate_control_set(small_spec(), small_ship(), 2.0);
  return cs;
}

Costmap random_costmap(std::mt19937_64& rng, int n_cols, int n_rows, double res) {
  Costmap map;
  map.grid.resolution = res;
  map.grid.n_cols = n_cols;
  map.grid.n_rows = n_rows;
  map.cost.resize(static_cast<std::size_t>(n_cols) * n_rows);
  map.obstacle_id.assign(map.cost.size(), -1);
  std::uniform_real_distribution<double> u(0, 1);
  for (auto& c : map.cost) c = (u(rng) < 0.3) ? 50.0 * u(rng) : 0.0;
  return map;
}

// Uninformed uniform-cost search over the identical lattice graph; optimal
// by construction, used as the optimality oracle for plan_path's A*.
double dijkstra_objective(const Pose& start, double x_subgoal, const Costmap& map,
                          const ControlSet& cs, double alpha) {
  const GridSpec& grid = map.grid;
  const double res = grid.resolution;
  const LatticeSpec& spec = cs.spec;
  const int nh = spec.n_headings;
  const double dpsi = kTwoPi / nh;
  const int cps = static_cast<int>(std::round(spec.spacing / res));
  const double ax = grid.origin.x + std::round((start.x - grid.origin.x) / res) * res;
  const double ay = grid.origin.y + std::round((start.y - grid.origin.y) / res) * res;
  const int k0 = ((static_cast<int>(std::lround(start.psi / dpsi)) % nh) + nh) % nh;
  const int acol = static_cast<int>(std::lround((ax - grid.origin.x) / res));
  const int arow = static_cast<int>(std::lround((ay - grid.origin.y) / res));
  const double reach = spec.neighborhood * spec.spacing;
  const double x_lo = std::min(ax, grid.origin.x) - reach;
  const double x_hi = std::max(x_subgoal, grid.origin.x + grid.n_cols * res) + reach;
  const int i_min = static_cast<int>(std::floor((x_lo - ax) / spec.spacing));
  const int i_max = static_cast<int>(std::ceil((x_hi - ax) / spec.spacing));
  const double half_w = cs.footprint.width / 2;
  int j_min = static_cast<int>(std::ceil((grid.origin.y + half_w - ay) / spec.spacing - 1e-9));
  int j_max = static_cast<int>(
      std::floor((grid.origin.y + grid.n_rows * res - half_w - ay) / spec.spacing + 1e-9));
  j_min = std::min(j_min, 0);
  j_max = std::max(j_max, 0);
  const int ni = i_max - i_min + 1, nj = j_max - j_min + 1;
  const std::size_t n = static_cast<std::size_t>(ni) * nj * nh;
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using E = std::pair<double, std::size_t>;
  std::priority_queue<E, std::vector<E>, std::greater<E>> open;
  const auto id_of = [&](int i, int j, int k) {
    return (static_cast<std::size_t>(i - i_min) * nj + (j - j_min)) * nh + k;
  };
  dist[id_of(0, 0, k0)] = 0;
  open.emplace(0.0, id_of(0, 0, k0));
  while (!open.empty()) {
    const auto [d, id] = open.top();
    open.pop();
    if (d > dist[id] + 1e-12) continue;
    const int k = static_cast<int>(id % nh);
    const int j = static_cast<int>(id / nh % nj) + j_min;
    const int i = static_cast<int>(id / nh / nj) + i_min;
    if (ax + i * spec.spacing >= x_subgoal - 1e-9) return d;
    for (const auto& prim : cs.by_heading[static_cast<std::size_t>(k)]) {
      const int i2 = i + prim.di, j2 = j + prim.dj;
      if (i2 < i_min || i2 > i_max || j2 < j_min || j2 > j_max) continue;
      bool blocked = false;
      const double sw = edge_swath_cost(prim, acol + i * cps, arow + j * cps, map, &blocked);
      if (blocked) continue;
      const double nd = d + prim.arc_length + alpha * sw;
      const std::size_t nid = id_of(i2, j2, prim.end_heading);
      if (nd < dist[nid] - 1e-12) {
        dist[nid] = nd;
        open.emplace(nd, nid);
      }
    }
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace

TEST_CASE("straight forward primitive present with length = spacing") {
  const auto& cs = small_control_set();
  bool found = false;
  for (const auto& p : cs.by_heading[0]) {
    if (p.di == 1 && p.dj == 0 && p.end_heading == 0) {
      found = true;
      CHECK(p.arc_length == doctest::Approx(cs.spec.spacing));
    }
  }
  CHECK(found);
}

TEST_CASE("sampled curvature bounded by 1/r_min on every primitive") {
  const auto& cs = small_control_set();
  for (const auto& cls : cs.by_heading) {
    for (const auto& p : cls) {
      for (std::size_t s = 1; s < p.poses.size(); ++s) {
        const double ds = (p.poses[s].position() - p.poses[s - 1].position()).norm();
        if (ds < 1e-9) continue;
        const double dpsi = std::fabs(wrap_to_pi(p.poses[s].psi - p.poses[s - 1].psi));
        CHECK(dpsi / ds <= 1.0 / cs.spec.r_min + 1e-3);
      }
    }
  }
}

TEST_CASE("primitive pose sequences start at origin and land on the target node") {
  const auto& cs = small_control_set();
  for (const auto& cls : cs.by_heading) {
    for (const auto& p : cls) {
      REQUIRE(!p.poses.empty());
      CHECK(p.poses.front().position().norm() < 1e-9);
      const Point2 end = p.poses.back().position();
      CHECK(std::fabs(end.x - p.di * cs.spec.spacing) < 1e-6);
      CHECK(std::fabs(end.y - p.dj * cs.spec.spacing) < 1e-6);
    }
  }
}

TEST_CASE("paper-scale control set size per heading class") {
  LatticeSpec spec;  // 30 m, 8 headings, 150 m
  auto cs = generate_control_set(spec, make_default_footprint(), 2.0);
  // With the 1.5x length gate at r_min/spacing = 5 the Dubins construction
  // admits on the order of ten moves per class (turn targets only exist at
  // the outer ring); just pin the order of magnitude.
  for (const auto& cls : cs.by_heading) {
    CHECK(cls.size() >= 6);
    CHECK(cls.size() <= 70);
  }
}

TEST_CASE("mirror symmetry of the control set") {
  const auto& cs = small_control_set();
  const int nh = cs.spec.n_headings;
  // Reflecting about the x axis maps heading k to (nh - k) % nh and dj to -dj.
  for (int k = 0; k < nh; ++k) {
    for (const auto& p : cs.by_heading[static_cast<std::size_t>(k)]) {
      bool found = false;
      for (const auto& q : cs.by_heading[static_cast<std::size_t>((nh - k) % nh)]) {
        if (q.di == p.di && q.dj == -p.dj && q.end_heading == (nh - p.end_heading) % nh &&
            std::fabs(q.arc_length - p.arc_length) < 1e-6) {
          found = true;
          break;
        }
      }
      CHECK(found);
    }
  }
}

TEST_CASE("h1 closed-form examples") {
  CHECK(h1_dubins_to_line(Pose(0, 0, 0), 100, 150) == doctest::Approx(100.0));
  CHECK(h1_dubins_to_line(Pose(0, 0, kPi / 2), 500, 150) ==
        doctest::Approx(150 * kPi / 2 + 350).epsilon(1e-9));
  CHECK(h1_dubins_to_line(Pose(0, 0, kPi / 2), 100, 150) ==
        doctest::Approx(150 * std::acos(1.0 / 3.0)).epsilon(1e-9));
  CHECK(h1_dubins_to_line(Pose(100, 5, 0), 100, 150) == 0.0);
  CHECK(h1_dubins_to_line(Pose(50, 0, 0), 100, 150) > 0.0);
}

TEST_CASE("h1 admissible against sampled Dubins-to-line oracle") {
  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> ux(-50, 50), uy(-100, 100), ua(0, kTwoPi);
  std::uniform_real_distribution<double> ur(20, 200), ug(10, 400);
  for (int trial = 0; trial < 1000; ++trial) {
    const Pose pose(ux(rng), uy(rng), ua(rng));
    const double r = ur(rng);
    const double x_goal = pose.x + ug(rng);
    const double h = h1_dubins_to_line(pose, x_goal, r);
    // 10^3 candidate line crossings: 100 y stations x 10 exit headings.
    for (int yi = 0; yi < 100; ++yi) {
      const double y = pose.y - 450 + 900.0 * yi / 99;
      for (int ai = 0; ai < 10; ++ai) {
        const double psi = -kPi / 2 + kPi * ai / 9;  // line-crossing headings
        auto p = dubins_shortest_path(pose, Pose(x_goal, y, psi), r);
        REQUIRE(p.has_value());
        CHECK(h <= p->total_length() + 1e-6);
      }
    }
  }
}

TEST_CASE("h2 single-window example") {
  Costmap map;
  map.grid.resolution = 1;
  map.grid.n_cols = 1;
  map.grid.n_rows = 5;
  map.cost = {0, 5, 1, 2, 9};
  map.obstacle_id.assign(5, -1);
  H2Table table(map, 3);
  CHECK(table.column_min(0) == doctest::Approx(6.0));
}

TEST_CASE("h2 zero map and query bounds") {
  Costmap map;
  map.grid.resolution = 2;
  map.grid.n_cols = 50;
  map.grid.n_rows = 20;
  map.cost.assign(1000, 0.0);
  map.obstacle_id.assign(1000, -1);
  H2Table table(map, 5, 4.0);
  CHECK(table.query(0, 100) == 0.0);
  CHECK(table.query(60, 40) == 0.0);
}

TEST_CASE("h2 admissible against lattice path swath costs") {
  std::mt19937_64 rng(71);
  const auto& cs = small_control_set();
  double r_margin = 0.0;
  for (const auto& v : cs.footprint.outline.vertices) r_margin = std::max(r_margin, v.norm());
  for (int trial = 0; trial < 100; ++trial) {
    auto map = random_costmap(rng, 80, 20, 2.0);  // 160 x 40 m
    const int w_cells = static_cast<int>(std::ceil(cs.footprint.width / 2.0));
    H2Table table(map, w_cells, r_margin);

    // Random primitive walk from a mid-channel node; the oracle is the cost
    // of the union of all swept cells (the path's true swath).
    const double ax = 10, ay = 20;
    int i = 0, j = 0, k = 0;
    std::vector<int> cells;
    bool ok = true;
    std::uniform_int_distribution<int> pick(0, 1 << 20);
    for (int step = 0; step < 8 && ok; ++step) {
      const auto& cls = cs.by_heading[static_cast<std::size_t>(k)];
      const auto& prim = cls[static_cast<std::size_t>(pick(rng)) % cls.size()];
      bool blocked = false;
      edge_swath_cost(prim, 5 + i * 5, 10 + j * 5, map, &blocked);
      if (blocked || std::fabs(ay + (j + prim.dj) * 10.0 - 20) > 14) {
        ok = false;
        break;
      }
      for (const auto& [dx, dy] : prim.swath) {
        const int ix = 5 + i * 5 + dx, iy = 10 + j * 5 + dy;
        if (ix >= 0 && ix < map.grid.n_cols) cells.push_back(map.grid.flat(ix, iy));
      }
      i += prim.di;
      j += prim.dj;
      k = prim.end_heading;
    }
    if (!ok || i <= 0) continue;
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    double true_cost = 0.0;
    for (int c : cells) true_cost += map.cost[static_cast<std::size_t>(c)];
    const double x_end = ax + i * 10.0;
    CHECK(table.query(ax, x_end) <= true_cost + 1e-9);
  }
}

TEST_CASE("empty map straight plan") {
  Costmap map;
  map.grid.resolution = 2;
  map.grid.n_cols = 100;
  map.grid.n_rows = 20;  // 200 x 40 m channel
  map.cost.assign(2000, 0.0);
  map.obstacle_id.assign(2000, -1);
  const auto& cs = small_control_set();
  auto r = plan_path(Pose(10, 20, 0), 110, map, cs, 4.8e-7);
  CHECK(r.objective == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(r.collision_cost == 0.0);
  CHECK(r.objective == doctest::Approx(r.length + 4.8e-7 * r.collision_cost));
  for (const auto& p : r.path.poses) CHECK(std::fabs(p.y - 20) < 1e-9);
}

TEST_CASE("planner avoids a massive central floe") {
  Costmap map;
  map.grid.resolution = 2;
  map.grid.n_cols = 100;
  map.grid.n_rows = 30;  // 200 x 60 m
  map.cost.assign(3000, 0.0);
  map.obstacle_id.assign(3000, -1);
  // High-cost blob on the straight line y = 30.
  for (int iy = 10; iy < 20; ++iy) {
    for (int ix = 40; ix < 55; ++ix) {
      map.cost[static_cast<std::size_t>(map.grid.flat(ix, iy))] = 1e6;
    }
  }
  const auto& cs = small_control_set();
  const double alpha = 1e-3;
  auto r = plan_path(Pose(10, 30, 0), 190, map, cs, alpha);

  // Straight-line J on the same map, via the straight primitive swaths.
  double straight_cost = 0.0;
  const MotionPrimitive* fwd = nullptr;
  for (const auto& p : cs.by_heading[0]) {
    if (p.di == 1 && p.dj == 0 && p.end_heading == 0) fwd = &p;
  }
  REQUIRE(fwd != nullptr);
  for (int i = 0; i < 18; ++i) {
    bool blocked = false;
    straight_cost += edge_swath_cost(*fwd, 5 + i * 5, 15, map, &blocked);
    REQUIRE(!blocked);
  }
  const double straight_J = 180.0 + alpha * straight_cost;
  CHECK(r.objective < straight_J);
  CHECK(r.collision_cost < straight_cost / 100);
}

TEST_CASE("A* equals Dijkstra on random instances") {
  std::mt19937_64 rng(73);
  const auto& cs = small_control_set();
  std::uniform_real_distribution<double> uy(14, 26);
  for (int trial = 0; trial < 50; ++trial) {
    auto map = random_costmap(rng, 50, 20, 2.0);  // 100 x 40 m
    const Pose start(6, uy(rng), 0);
    const double alpha = 0.01;
    const double oracle = dijkstra_objective(start, 90, map, cs, alpha);
    REQUIRE(std::isfinite(oracle));
    auto r = plan_path(start, 90, map, cs, alpha);
    CHECK(r.objective == doctest::Approx(oracle).epsilon(1e-9));
  }
}

TEST_CASE("unreachable goal throws") {
  Costmap map;
  map.grid.resolution = 2;
  map.grid.n_cols = 40;
  map.grid.n_rows = 1;  // 2 m wide: the 3 m beam cannot fit between the walls
  map.cost.assign(40, 0.0);
  map.obstacle_id.assign(40, -1);
  const auto& cs = small_control_set();
  CHECK_THROWS_AS(plan_path(Pose(4, 1, 0), 70, map, cs, 1.0), NoPathFound);
}

TEST_CASE("planner debug dump is valid JSON-ish") {
  Costmap map;
  map.grid.resolution = 2;
  map.grid.n_cols = 50;
  map.grid.n_rows = 20;
  map.cost.assign(1000, 0.0);
  map.obstacle_id.assign(1000, -1);
  auto r = plan_path(Pose(6, 20, 0), 90, map, small_control_set(), 1.0);
  const auto s = planner_debug_json(r);
  CHECK(s.find("nodes_expanded") != std::string::npos);
  CHECK(s.find("L_f") != std::string::npos);
}
