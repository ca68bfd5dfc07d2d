#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "icenav/errors.hpp"
#include "icenav/optimizer.hpp"

using namespace icenav;

namespace {

IceField floe_field(double cx, double cy, double half, double L, double W) {
  IceField field;
  field.channel_length = L;
  field.channel_width = W;
  IceFloe f;
  f.polygon = convex_hull({{cx - half, cy - half},
                           {cx + half, cy - half},
                           {cx + half, cy + half},
                           {cx - half, cy + half}});
  const auto props = polygon_properties(f.polygon);
  f.area = props.area;
  f.centroid = props.centroid;
  f.bounding_radius = props.bounding_radius;
  f.thickness = 1.2;
  f.density = 900.0;
  f.mass = f.density * f.thickness * f.area;
  f.id = 0;
  field.floes.push_back(f);
  field.concentration = f.area / (L * W);
  return field;
}

CostField make_field(const IceField& ice, double res = 2.0) {
  CostmapParams params;
  params.grid_resolution = res;
  params.kernel_size = 5;
  auto map = build_costmap(ice, 2.0, 6e6, params);
  return CostField(map, 10 * std::max(map.max_cost(), 1.0), 18.0);
}

BodyPointSet small_body() {
  ShipFootprint fp;
  fp.outline = convex_hull({{-4, -1.5}, {4, -1.5}, {4, 1.5}, {-4, 1.5}});
  fp.length = 8;
  fp.width = 3;
  return default_body_points(fp, 3.0, 1e-3, 2.0);
}

PlannedPath straight_warm(double x0, double y0, double x1) {
  PlannedPath path;
  const int n = 40;
  for (int i = 0; i <= n; ++i) path.poses.push_back(Pose(x0 + (x1 - x0) * i / n, y0, 0));
  return path;
}

}  // namespace

TEST_CASE("default body points: paper layout") {
  auto fp = make_default_footprint(76.2, 18.0, 15.0);
  auto set = default_body_points(fp, 6.0, 4.8e-7, 2.0);
  CHECK(set.points.size() == 52);
  int rows = 0;
  for (const auto& p : set.points) {
    if (std::fabs(p.x + 76.2 / 2) < 1e-9) ++rows;
  }
  CHECK(rows == 4);
  for (double w : set.weights) {
    CHECK(w == doctest::Approx(4.8e-7 * 36 / (76.2 * 4)).epsilon(1e-12));
  }
}

TEST_CASE("default body points: degenerate grid is the corner set") {
  ShipFootprint fp;
  fp.outline = convex_hull({{-5, -5}, {5, -5}, {5, 5}, {-5, 5}});
  fp.length = 10;
  fp.width = 10;
  auto set = default_body_points(fp, 10.0, 1.0, 1.0);
  CHECK(set.points.size() == 4);
}

TEST_CASE("rk4 step: zero curvature is exact translation") {
  const Pose p(3, 4, 0.7);
  const Pose q = rk4_unicycle_step(p, 0.0, 5.0);
  CHECK(q.x == doctest::Approx(3 + 5 * std::cos(0.7)).epsilon(1e-15));
  CHECK(q.y == doctest::Approx(4 + 5 * std::sin(0.7)).epsilon(1e-15));
  CHECK(q.psi == doctest::Approx(0.7));
}

TEST_CASE("rk4 step: quarter circle over 50 steps") {
  const double r = 150.0;
  Pose p(0, 0, 0);
  const double total = r * kPi / 2;
  for (int i = 0; i < 50; ++i) p = rk4_unicycle_step(p, 1.0 / r, total / 50);
  CHECK(std::fabs(p.x - r) < 1e-3);
  CHECK(std::fabs(p.y - r) < 1e-3);
  CHECK(std::fabs(wrap_to_pi(p.psi - kPi / 2)) < 1e-12);
}

TEST_CASE("rk4 step: 4th-order convergence ratio") {
  const Pose p(0, 0, 0.3);
  const double kappa = 1.0 / 40;
  auto defect = [&](double ds) {
    const Pose full = rk4_unicycle_step(p, kappa, ds);
    const Pose halves = rk4_unicycle_step(rk4_unicycle_step(p, kappa, ds / 2), kappa, ds / 2);
    return std::hypot(full.x - halves.x, full.y - halves.y);
  };
  const double d4 = defect(4), d2 = defect(2), d1 = defect(1);
  CHECK(d4 / d2 == doctest::Approx(32.0).epsilon(0.15));
  CHECK(d2 / d1 == doctest::Approx(32.0).epsilon(0.15));
}

TEST_CASE("nlp objective: zero field reduces to path length") {
  IceField empty;
  empty.channel_length = 200;
  empty.channel_width = 80;
  auto field = make_field(empty);
  NlpProblem prob;
  prob.N = 10;
  prob.lambda = 5e4;
  prob.body = small_body();
  prob.field = &field;
  std::vector<double> vars;
  for (int i = 0; i <= 10; ++i) {
    vars.push_back(10.0 + 4 * i);
    vars.push_back(40.0);
    vars.push_back(0.0);
  }
  for (int i = 0; i < 10; ++i) vars.push_back(0.0);
  vars.push_back(4.0);
  auto [F, g] = nlp_objective(prob, vars);
  CHECK(F == doctest::Approx(40.0).epsilon(1e-12));
}

TEST_CASE("nlp objective: origin body point term is the plain line integral") {
  auto ice = floe_field(60, 40, 10, 200, 80);
  auto field = make_field(ice);
  NlpProblem prob;
  prob.N = 5;
  prob.lambda = 0;
  prob.body.points = {{0, 0}};
  prob.body.weights = {2.5};
  prob.field = &field;
  std::vector<double> vars;
  double expect = 0.0;
  const double ds = 3.0;
  for (int i = 0; i <= 5; ++i) {
    const double x = 45.0 + 5 * i, y = 38.0;
    vars.push_back(x);
    vars.push_back(y);
    vars.push_back(0.4);
    expect += 2.5 * field.value(x, y) * ds;
  }
  for (int i = 0; i < 5; ++i) vars.push_back(0.01 * i);
  vars.push_back(ds);
  auto [F, g] = nlp_objective(prob, vars);
  CHECK(F == doctest::Approx(expect + 5 * ds).epsilon(1e-9));
}

TEST_CASE("nlp objective gradient matches central finite differences") {
  auto ice = floe_field(60, 40, 12, 200, 80);
  auto field = make_field(ice);
  NlpProblem prob;
  prob.N = 6;
  prob.lambda = 5e4;
  prob.body = small_body();
  prob.field = &field;
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<double> ux(30, 90), uy(25, 55), ua(-0.6, 0.6);
  std::uniform_real_distribution<double> uk(-0.02, 0.02), uds(2.5, 5.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> vars;
    for (int i = 0; i <= 6; ++i) {
      vars.push_back(ux(rng));
      vars.push_back(uy(rng));
      vars.push_back(ua(rng));
    }
    for (int i = 0; i < 6; ++i) vars.push_back(uk(rng));
    vars.push_back(uds(rng));
    auto [F, g] = nlp_objective(prob, vars);
    for (std::size_t v = 0; v < vars.size(); ++v) {
      const double h = 1e-5 * std::max(1.0, std::fabs(vars[v]));
      auto vp = vars, vm = vars;
      vp[v] += h;
      vm[v] -= h;
      const double fd = (nlp_objective(prob, vp).first - nlp_objective(prob, vm).first) / (2 * h);
      const double rel = std::fabs(g[v] - fd) / std::max({1.0, std::fabs(g[v]), std::fabs(fd)});
      worst = std::max(worst, rel);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("optimize: zero field straight warm start stays straight") {
  IceField empty;
  empty.channel_length = 200;
  empty.channel_width = 80;
  auto field = make_field(empty);
  OptimizerParams params;
  params.ds_init = 4.0;
  params.r_min = 30.0;
  params.x_subgoal = 110.0;
  params.y_min = 0;
  params.y_max = 80;
  auto out = optimize_path(straight_warm(10, 40, 120), field, small_body(), params);
  CHECK(out.objective == doctest::Approx(100.0).epsilon(1e-6));
  CHECK(std::fabs(out.poses.back().x - 110.0) <= params.tol_terminal);
  for (const auto& p : out.poses) CHECK(std::fabs(p.y - 40) < 0.2);
}

TEST_CASE("optimize: cost decreases vs warm start, bounds and residual hold") {
  std::mt19937_64 rng(89);
  std::uniform_real_distribution<double> ucx(40, 80), ucy(30, 50), uh(4, 10);
  int improved = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto ice = floe_field(ucx(rng), ucy(rng), uh(rng), 200, 80);
    auto field = make_field(ice);
    OptimizerParams params;
    params.ds_init = 4.0;
    params.r_min = 30.0;
    params.x_subgoal = 110.0;
    params.y_min = 0;
    params.y_max = 80;
    params.max_inner = 60;
    auto out = optimize_path(straight_warm(10, 40, 120), field, small_body(), params);
    if (out.objective <= out.warm_objective + 1e-9) ++improved;
    for (double k : out.kappas) CHECK(std::fabs(k) <= 1.0 / params.r_min + 1e-15);
    // Dynamics residual: states are the exact rollout of the controls.
    for (std::size_t i = 0; i + 1 < out.poses.size(); ++i) {
      const Pose pred = rk4_unicycle_step(out.poses[i], out.kappas[i], out.ds);
      CHECK(std::hypot(pred.x - out.poses[i + 1].x, pred.y - out.poses[i + 1].y) <= 1e-6);
    }
    CHECK(std::fabs(out.poses.back().x - params.x_subgoal) <= params.tol_terminal);
  }
  CHECK(improved >= 95);
}

TEST_CASE("optimize: dodges a single high-cost blob") {
  auto ice = floe_field(60, 37, 8, 200, 80);  // off-center: a centered blob is a symmetric saddle
  auto field = make_field(ice);
  OptimizerParams params;
  params.ds_init = 4.0;
  params.r_min = 30.0;
  params.x_subgoal = 110.0;
  params.y_min = 0;
  params.y_max = 80;
  auto out = optimize_path(straight_warm(10, 40, 120), field, small_body(), params);
  CHECK(out.objective < out.warm_objective);
  // The path should deviate from the blocked line.
  double max_dev = 0.0;
  for (const auto& p : out.poses) max_dev = std::max(max_dev, std::fabs(p.y - 40));
  CHECK(max_dev > 1.0);
}

TEST_CASE("objective invariance under rigid y translation") {
  auto ice_a = floe_field(60, 30, 8, 200, 80);
  auto ice_b = floe_field(60, 40, 8, 200, 80);  // shifted by 10 m = 5 cells
  auto fa = make_field(ice_a);
  auto fb = make_field(ice_b);
  NlpProblem pa, pb;
  pa.N = pb.N = 6;
  pa.lambda = pb.lambda = 5e4;
  pa.body = pb.body = small_body();
  pa.field = &fa;
  pb.field = &fb;
  std::mt19937_64 rng(97);
  std::uniform_real_distribution<double> ux(40, 80), uy(22, 36), ua(-0.5, 0.5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> va, vb;
    for (int i = 0; i <= 6; ++i) {
      const double x = ux(rng), y = uy(rng), psi = ua(rng);
      va.insert(va.end(), {x, y, psi});
      vb.insert(vb.end(), {x, y + 10.0, psi});
    }
    for (int i = 0; i < 6; ++i) {
      const double k = 0.01 * (i - 3);
      va.push_back(k);
      vb.push_back(k);
    }
    va.push_back(4.0);
    vb.push_back(4.0);
    CHECK(nlp_objective(pa, va).first ==
          doctest::Approx(nlp_objective(pb, vb).first).epsilon(1e-9));
  }
}

TEST_CASE("infeasible warm start throws") {
  PlannedPath bad;
  bad.poses = {Pose(200, 40, 0), Pose(210, 40, 0)};  // starts past the subgoal
  IceField empty;
  empty.channel_length = 300;
  empty.channel_width = 80;
  auto field = make_field(empty);
  OptimizerParams params;
  params.x_subgoal = 110.0;
  CHECK_THROWS_AS(optimize_path(bad, field, small_body(), params), InfeasibleWarmStart);
}
