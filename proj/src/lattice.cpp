#include "icenav/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <tuple>

#include <nlohmann/json.hpp>

#include "icenav/errors.hpp"

namespace icenav {

namespace {

constexpr double kLenTol = 1e-6;

struct OffsetKey {
  int di, dj, end_heading;
  bool operator<(const OffsetKey& o) const {
    return std::tie(di, dj, end_heading) < std::tie(o.di, o.dj, o.end_heading);
  }
};

}  // namespace

ControlSet generate_control_set(const LatticeSpec& spec, const ShipFootprint& footprint,
                                double grid_res) {
  if (spec.spacing <= 0 || spec.n_headings <= 0 || grid_res <= 0) {
    throw ConfigError("generate_control_set: bad lattice spec");
  }
  if (spec.r_min < spec.spacing / 2) {
    throw ConfigError("generate_control_set: r_min below spacing/2");
  }
  const double cells = spec.spacing / grid_res;
  if (std::fabs(cells - std::round(cells)) > 1e-9) {
    throw ConfigError("generate_control_set: spacing must be a whole number of cells");
  }

  const int nh = spec.n_headings;
  const double dpsi = kTwoPi / nh;
  const int nb = spec.neighborhood;

  // Candidate Dubins connections for every (heading, offset, heading) triple.
  struct Candidate {
    DubinsPath path;
    double length;
  };
  std::vector<std::map<OffsetKey, Candidate>> cands(static_cast<std::size_t>(nh));
  for (int k = 0; k < nh; ++k) {
    const Pose from(0, 0, k * dpsi);
    for (int di = -nb; di <= nb; ++di) {
      for (int dj = -nb; dj <= nb; ++dj) {
        if (di == 0 && dj == 0) continue;
        const double ex = di * spec.spacing, ey = dj * spec.spacing;
        const double euclid = std::hypot(ex, ey);
        for (int k2 = 0; k2 < nh; ++k2) {
          auto p = dubins_shortest_path(from, Pose(ex, ey, k2 * dpsi), spec.r_min);
          if (!p) continue;
          const double len = p->total_length();
          if (len > spec.length_ratio * euclid + kLenTol) continue;
          cands[static_cast<std::size_t>(k)][{di, dj, k2}] = {*p, len};
        }
      }
    }
  }

  // Drop primitives decomposable into two in-set legs of (about) the same
  // total length; they add nothing the search cannot compose.
  auto dominated = [&](int k, const OffsetKey& key, double len) {
    for (const auto& [mid, leg1] : cands[static_cast<std::size_t>(k)]) {
      if (mid.di == key.di && mid.dj == key.dj && mid.end_heading == key.end_heading) continue;
      const auto& second = cands[static_cast<std::size_t>(mid.end_heading)];
      const auto it = second.find({key.di - mid.di, key.dj - mid.dj, key.end_heading});
      if (it == second.end()) continue;
      if (leg1.length + it->second.length <= len + kLenTol) return true;
    }
    return false;
  };

  // Local swath grid, corner-aligned with the start position so cell offsets
  // transfer exactly to any grid-aligned lattice anchor.
  const double half_extent = nb * spec.spacing + footprint.length + 4 * grid_res;
  const int half_cells = static_cast<int>(std::ceil(half_extent / grid_res));
  GridSpec local;
  local.resolution = grid_res;
  local.n_cols = local.n_rows = 2 * half_cells;
  local.origin = {-half_cells * grid_res, -half_cells * grid_res};

  ControlSet cs;
  cs.spec = spec;
  cs.grid_res = grid_res;
  cs.footprint = footprint;
  cs.by_heading.resize(static_cast<std::size_t>(nh));
  for (int k = 0; k < nh; ++k) {
    for (const auto& [key, cand] : cands[static_cast<std::size_t>(k)]) {
      if (dominated(k, key, cand.length)) continue;
      MotionPrimitive prim;
      prim.start_heading = k;
      prim.di = key.di;
      prim.dj = key.dj;
      prim.end_heading = key.end_heading;
      prim.poses = cand.path.sample(grid_res / 2);
      prim.arc_length = cand.length;
      const auto cells_hit = swath_trace(prim.poses, footprint, local);
      prim.swath.reserve(cells_hit.size());
      for (int c : cells_hit) {
        prim.swath.emplace_back(c % local.n_cols - half_cells, c / local.n_cols - half_cells);
      }
      cs.by_heading[static_cast<std::size_t>(k)].push_back(std::move(prim));
    }
  }

  for (int k = 0; k < nh; ++k) {
    const double hx = std::cos(k * dpsi), hy = std::sin(k * dpsi);
    bool forward = false;
    for (const auto& p : cs.by_heading[static_cast<std::size_t>(k)]) {
      if (p.di * hx + p.dj * hy > 1e-9) forward = true;
    }
    if (!forward) throw ConfigError("generate_control_set: heading class has no forward move");
  }
  return cs;
}

double h1_dubins_to_line(const Pose& pose, double x_goal, double r_min) {
  if (pose.x >= x_goal) return 0.0;
  const auto cs_length = [&](double phi, double x) {
    const double x_c = x + r_min * std::fabs(std::cos(phi));
    if (x_c <= x_goal) return r_min * std::fabs(kPi / 2 - phi) + (x_goal - x_c);
    return r_min * std::fabs(phi - std::acos((x_c - x_goal) / r_min));
  };
  const double theta = std::fabs(wrap_to_pi(pose.psi));
  if (theta <= kPi / 2) return cs_length(kPi / 2 - theta, pose.x);
  // Pointing away: at least the arc back to parallel, then the CS bound.
  return r_min * (theta - kPi / 2) + cs_length(0.0, pose.x);
}

H2Table::H2Table(const Costmap& map, int w_cells, double margin)
    : grid_(map.grid), margin_(margin) {
  if (w_cells < 1) throw ConfigError("H2Table: w_cells < 1");
  const int w = std::min(w_cells, grid_.n_rows);
  col_min_.resize(static_cast<std::size_t>(grid_.n_cols));
  for (int ix = 0; ix < grid_.n_cols; ++ix) {
    double window = 0.0;
    for (int iy = 0; iy < w; ++iy) window += map.at(ix, iy);
    double best = window;
    for (int iy = w; iy < grid_.n_rows; ++iy) {
      window += map.at(ix, iy) - map.at(ix, iy - w);
      best = std::min(best, window);
    }
    col_min_[static_cast<std::size_t>(ix)] = best;
  }
  prefix_.resize(col_min_.size() + 1, 0.0);
  for (std::size_t i = 0; i < col_min_.size(); ++i) prefix_[i + 1] = prefix_[i] + col_min_[i];
}

double H2Table::query(double x, double x_goal) const {
  const double res = grid_.resolution;
  int lo = static_cast<int>(std::ceil((x + margin_ - grid_.origin.x) / res - 0.5));
  int hi = static_cast<int>(std::floor((x_goal - margin_ - grid_.origin.x) / res - 0.5));
  lo = std::max(lo, 0);
  hi = std::min(hi, grid_.n_cols - 1);
  if (lo > hi) return 0.0;
  return prefix_[static_cast<std::size_t>(hi) + 1] - prefix_[static_cast<std::size_t>(lo)];
}

double edge_swath_cost(const MotionPrimitive& prim, int base_col, int base_row,
                       const Costmap& map, bool* blocked) {
  double total = 0.0;
  for (const auto& [dx, dy] : prim.swath) {
    const int iy = base_row + dy;
    if (iy < 0 || iy >= map.grid.n_rows) {
      if (blocked) {
        *blocked = true;
        return 0.0;
      }
      continue;  // caller opted out of lateral blocking
    }
    const int ix = base_col + dx;
    if (ix < 0 || ix >= map.grid.n_cols) continue;  // open water off the map ends
    total += map.at(ix, iy);
  }
  if (blocked) *blocked = false;
  return total;
}

PlannerResult plan_path(const Pose& start, double x_subgoal, const Costmap& map,
                        const ControlSet& cs, double alpha) {
  const GridSpec& grid = map.grid;
  const double res = grid.resolution;
  if (std::fabs(res - cs.grid_res) > 1e-9) {
    throw ConfigError("plan_path: control set built for a different resolution");
  }
  if (!(x_subgoal > start.x)) throw ConfigError("plan_path: subgoal behind start");

  const LatticeSpec& spec = cs.spec;
  const int nh = spec.n_headings;
  const double dpsi = kTwoPi / nh;
  const int cps = static_cast<int>(std::round(spec.spacing / res));

  // Anchor the lattice at the start pose snapped to the costmap grid.
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
  const std::size_t n_nodes = static_cast<std::size_t>(ni) * nj * nh;
  const auto node_id = [&](int i, int j, int k) {
    return (static_cast<std::size_t>(i - i_min) * nj + (j - j_min)) * nh + k;
  };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> g(n_nodes, kInf), g_len(n_nodes, 0.0), g_cost(n_nodes, 0.0);
  std::vector<int> parent(n_nodes, -1), parent_prim(n_nodes, -1);

  double r_margin = 0.0;
  for (const auto& v : cs.footprint.outline.vertices) r_margin = std::max(r_margin, v.norm());
  const int w_cells = std::max(1, static_cast<int>(std::ceil(cs.footprint.width / res)));
  const H2Table h2(map, w_cells, r_margin);
  const auto heuristic = [&](double x, double psi) {
    return h1_dubins_to_line(Pose(x, 0, psi), x_subgoal, spec.r_min) +
           alpha * h2.query(x, x_subgoal);
  };

  using Entry = std::tuple<double, double, std::size_t, double>;  // f, C, id, g at push
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> open;
  const std::size_t start_id = node_id(0, 0, k0);
  g[start_id] = 0.0;
  open.emplace(heuristic(ax, k0 * dpsi), 0.0, start_id, 0.0);

  PlannerResult result;
  std::size_t goal = n_nodes;
  while (!open.empty()) {
    const auto [f, c_tie, id, g_at_push] = open.top();
    open.pop();
    if (g_at_push > g[id] + 1e-12) continue;  // stale
    ++result.nodes_expanded;
    const int k = static_cast<int>(id % nh);
    const int j = static_cast<int>(id / nh % nj) + j_min;
    const int i = static_cast<int>(id / nh / nj) + i_min;
    const double x = ax + i * spec.spacing;
    if (x >= x_subgoal - 1e-9) {
      goal = id;
      break;
    }
    const auto& prims = cs.by_heading[static_cast<std::size_t>(k)];
    for (std::size_t pi = 0; pi < prims.size(); ++pi) {
      const auto& prim = prims[pi];
      const int i2 = i + prim.di, j2 = j + prim.dj;
      if (i2 < i_min || i2 > i_max || j2 < j_min || j2 > j_max) continue;
      bool blocked = false;
      // The start pose is wherever the controller left the ship; if its
      // footprint already overhangs the channel edge, the first move must
      // still be expandable or no recovery plan exists.
      const double swath = edge_swath_cost(prim, acol + i * cps, arow + j * cps, map,
                                           id == start_id ? nullptr : &blocked);
      if (blocked) continue;
      const std::size_t nid = node_id(i2, j2, prim.end_heading);
      const double cand = g[id] + prim.arc_length + alpha * swath;
      if (cand < g[nid] - 1e-12) {
        g[nid] = cand;
        g_len[nid] = g_len[id] + prim.arc_length;
        g_cost[nid] = g_cost[id] + swath;
        parent[nid] = static_cast<int>(id);
        parent_prim[nid] = static_cast<int>(pi);
        const double x2 = ax + i2 * spec.spacing;
        open.emplace(cand + heuristic(x2, prim.end_heading * dpsi), g_cost[nid], nid, cand);
      }
    }
  }
  if (goal == n_nodes) throw NoPathFound("plan_path: subgoal line unreachable");

  // Walk parents back to the start, then emit poses forward.
  std::vector<std::pair<std::size_t, int>> chain;  // (node, primitive into node)
  for (std::size_t id = goal; parent_prim[id] >= 0; id = static_cast<std::size_t>(parent[id])) {
    chain.emplace_back(id, parent_prim[id]);
  }
  std::reverse(chain.begin(), chain.end());

  result.path.poses.push_back(Pose(ax, ay, k0 * dpsi));
  for (const auto& [nid, pi] : chain) {
    const std::size_t pid = static_cast<std::size_t>(parent[nid]);
    const int k = static_cast<int>(pid % nh);
    const int j = static_cast<int>(pid / nh % nj) + j_min;
    const int i = static_cast<int>(pid / nh / nj) + i_min;
    const auto& prim = cs.by_heading[static_cast<std::size_t>(k)][static_cast<std::size_t>(pi)];
    const double bx = ax + i * spec.spacing, by = ay + j * spec.spacing;
    for (std::size_t s = 1; s < prim.poses.size(); ++s) {
      result.path.poses.push_back(
          Pose(bx + prim.poses[s].x, by + prim.poses[s].y, prim.poses[s].psi));
    }
    result.path.primitive_ids.push_back((k << 20) | pi);
  }
  result.length = g_len[goal];
  result.collision_cost = g_cost[goal];
  result.objective = result.length + alpha * result.collision_cost;
  return result;
}

std::string planner_debug_json(const PlannerResult& result) {
  nlohmann::json j;
  j["nodes_expanded"] = result.nodes_expanded;
  j["J"] = result.objective;
  j["L_f"] = result.length;
  j["C_f"] = result.collision_cost;
  auto& poses = j["poses"] = nlohmann::json::array();
  for (const auto& p : result.path.poses) poses.push_back({p.x, p.y, p.psi});
  return j.dump();
}

}  // namespace icenav
