#include "icenav/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "icenav/errors.hpp"

namespace icenav {

namespace {

inline int idx(int ix, int iy, int cols) { return iy * cols + ix; }

inline int px(const std::vector<std::uint8_t>& img, int rows, int cols, int ix, int iy) {
  if (ix < 0 || ix >= cols || iy < 0 || iy >= rows) return 0;
  return img[idx(ix, iy, cols)];
}

}  // namespace

std::vector<std::uint8_t> zhang_suen_thin(std::vector<std::uint8_t> image, int rows, int cols) {
  bool changed = true;
  std::vector<int> kill;
  while (changed) {
    changed = false;
    for (int phase = 0; phase < 2; ++phase) {
      kill.clear();
      for (int iy = 0; iy < rows; ++iy) {
        for (int ix = 0; ix < cols; ++ix) {
          if (!image[idx(ix, iy, cols)]) continue;
          // Neighbors P2..P9 clockwise starting north (north = +y row).
          const int p[8] = {px(image, rows, cols, ix, iy + 1),  px(image, rows, cols, ix + 1, iy + 1),
                            px(image, rows, cols, ix + 1, iy),  px(image, rows, cols, ix + 1, iy - 1),
                            px(image, rows, cols, ix, iy - 1),  px(image, rows, cols, ix - 1, iy - 1),
                            px(image, rows, cols, ix - 1, iy),  px(image, rows, cols, ix - 1, iy + 1)};
          int b = 0, a = 0;
          for (int k = 0; k < 8; ++k) {
            b += p[k];
            if (!p[k] && p[(k + 1) % 8]) ++a;
          }
          if (b < 2 || b > 6 || a != 1) continue;
          const bool ok = phase == 0 ? (!(p[0] && p[2] && p[4]) && !(p[2] && p[4] && p[6]))
                                     : (!(p[0] && p[2] && p[6]) && !(p[0] && p[4] && p[6]));
          if (ok) kill.push_back(idx(ix, iy, cols));
        }
      }
      for (int k : kill) image[k] = 0;
      if (!kill.empty()) changed = true;
    }
  }
  return image;
}

std::vector<std::uint8_t> erode3x3(const std::vector<std::uint8_t>& image, int rows, int cols) {
  std::vector<std::uint8_t> out(image.size(), 0);
  for (int iy = 0; iy < rows; ++iy)
    for (int ix = 0; ix < cols; ++ix) {
      if (!image[idx(ix, iy, cols)]) continue;
      bool keep = true;
      for (int dy = -1; dy <= 1 && keep; ++dy)
        for (int dx = -1; dx <= 1 && keep; ++dx)
          if (!px(image, rows, cols, ix + dx, iy + dy)) keep = false;
      out[idx(ix, iy, cols)] = keep;
    }
  return out;
}

std::vector<Pose> skeleton_path(const IceField& field, const Pose& start, double x_subgoal,
                                double grid_res, double r_min) {
  GridSpec grid;
  grid.resolution = grid_res;
  grid.n_cols = static_cast<int>(std::ceil(field.channel_length / grid_res));
  grid.n_rows = static_cast<int>(std::ceil(field.channel_width / grid_res));
  grid.origin = {0.0, 0.0};
  const int rows = grid.n_rows, cols = grid.n_cols;

  std::vector<std::uint8_t> obstacle = occupancy_image(field, grid);
  const double x_goal_line = std::min(x_subgoal, grid.origin.x + (cols - 0.5) * grid_res);

  std::vector<Point2> waypoints;
  for (;;) {
    std::vector<std::uint8_t> free(obstacle.size());
    for (std::size_t i = 0; i < free.size(); ++i) free[i] = obstacle[i] ? 0 : 1;
    const auto skel = zhang_suen_thin(free, rows, cols);

    // Nearest skeleton pixel to the start; goal set near the subgoal line.
    int src = -1;
    double best = std::numeric_limits<double>::infinity();
    double max_x = -std::numeric_limits<double>::infinity();
    for (int iy = 0; iy < rows; ++iy)
      for (int ix = 0; ix < cols; ++ix) {
        if (!skel[idx(ix, iy, cols)]) continue;
        const Point2 c = grid.cell_center(ix, iy);
        const double d = (c - start.position()).norm();
        if (d < best) {
          best = d;
          src = idx(ix, iy, cols);
        }
        max_x = std::max(max_x, c.x);
      }
    // The medial axis retracts from the channel ends, so aim for its
    // farthest-forward extent (capped by the subgoal line); the rollout
    // extends straight from there.
    std::vector<std::uint8_t> is_goal(skel.size(), 0);
    bool any_goal = false;
    const double goal_x = std::min(x_goal_line, max_x) - 2 * grid_res;
    for (int iy = 0; iy < rows; ++iy)
      for (int ix = 0; ix < cols; ++ix) {
        if (!skel[idx(ix, iy, cols)]) continue;
        if (grid.cell_center(ix, iy).x >= goal_x) {
          is_goal[idx(ix, iy, cols)] = 1;
          any_goal = true;
        }
      }

    int reached = -1;
    std::vector<int> prev(skel.size(), -1);
    if (src >= 0 && any_goal) {
      std::vector<double> dist(skel.size(), std::numeric_limits<double>::infinity());
      using Entry = std::pair<double, int>;
      std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
      dist[src] = 0;
      open.push({0, src});
      while (!open.empty()) {
        const auto [d, node] = open.top();
        open.pop();
        if (d > dist[node] + 1e-12) continue;
        if (is_goal[node]) {
          reached = node;
          break;
        }
        const int ix = node % cols, iy = node / cols;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (!dx && !dy) continue;
            const int nx = ix + dx, ny = iy + dy;
            if (nx < 0 || nx >= cols || ny < 0 || ny >= rows) continue;
            const int nn = idx(nx, ny, cols);
            if (!skel[nn]) continue;
            const double nd = d + grid_res * std::hypot(dx, dy);
            if (nd < dist[nn] - 1e-15) {
              dist[nn] = nd;
              prev[nn] = node;
              open.push({nd, nn});
            }
          }
      }
    }

    if (reached >= 0) {
      std::vector<Point2> pixels;
      for (int node = reached; node >= 0; node = prev[node])
        pixels.push_back(grid.cell_center(node % cols, node / cols));
      std::reverse(pixels.begin(), pixels.end());
      waypoints.push_back(start.position());
      waypoints.insert(waypoints.end(), pixels.begin(), pixels.end());

      // Greedy shortcutting against the free mask.
      auto segment_free = [&](const Point2& a, const Point2& b) {
        const double len = (b - a).norm();
        const int n = std::max(2, static_cast<int>(std::ceil(len / (grid_res / 2))));
        for (int k = 0; k <= n; ++k) {
          const Point2 p = a + (b - a) * (static_cast<double>(k) / n);
          if (p.y < grid.origin.y || p.y > grid.origin.y + rows * grid_res) return false;
          const int ix = grid.col_of(p.x), iy = grid.row_of(p.y);
          if (ix < 0 || ix >= cols) continue;
          if (iy >= 0 && iy < rows && obstacle[idx(ix, iy, cols)]) return false;
        }
        return true;
      };
      std::vector<Point2> cut{waypoints.front()};
      std::size_t i = 0;
      while (i + 1 < waypoints.size()) {
        std::size_t j = waypoints.size() - 1;
        while (j > i + 1 && !segment_free(waypoints[i], waypoints[j])) --j;
        cut.push_back(waypoints[j]);
        i = j;
      }
      waypoints = std::move(cut);
      break;
    }

    // No route: erode the obstacles one cell and retry.
    bool any_obstacle = false;
    for (auto v : obstacle) any_obstacle |= v != 0;
    if (!any_obstacle) throw PlanningFailure("skeleton_path: no route even in an empty channel");
    obstacle = erode3x3(obstacle, rows, cols);
  }

  // Curvature-clamped rollout chasing the shortcut polyline.
  const double kmax = 1.0 / r_min;
  const double step = grid_res / 2;
  const double lookahead = std::max(3.0 * grid_res, 0.6 * r_min);
  std::vector<Pose> path{start};
  Pose pose = start;
  std::size_t ti = 1;
  const double span = x_subgoal - start.x + field.channel_width + 100.0;
  const long cap = static_cast<long>(5.0 * span / step) + 10;
  for (long it = 0; it < cap && pose.x < x_subgoal; ++it) {
    while (ti + 1 < waypoints.size()) {
      const Point2 to = waypoints[ti] - pose.position();
      const bool behind = to.dot({std::cos(pose.psi), std::sin(pose.psi)}) < 0;
      if (to.norm() < lookahead || behind)
        ++ti;
      else
        break;
    }
    double desired;
    const Point2 to = waypoints[std::min(ti, waypoints.size() - 1)] - pose.position();
    if (ti + 1 >= waypoints.size() && (to.norm() < lookahead || to.x < 0))
      desired = 0.0;  // past the last waypoint: settle onto +x
    else
      desired = std::atan2(to.y, to.x);
    const double err = wrap_to_pi(desired - pose.psi);
    const double kappa = std::clamp(2.0 * std::sin(err) / lookahead, -kmax, kmax);
    const double psi_new = pose.psi + kappa * step;
    pose = Pose(pose.x + step * std::cos(pose.psi + kappa * step / 2),
                pose.y + step * std::sin(pose.psi + kappa * step / 2), psi_new);
    path.push_back(pose);
  }
  return path;
}

}  // namespace icenav
