#include "icenav/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "icenav/errors.hpp"

namespace icenav {

BodyPointSet default_body_points(const ShipFootprint& footprint, double db, double alpha,
                                 double grid_res) {
  if (db <= 0 || grid_res <= 0) throw ConfigError("default_body_points: bad spacing");
  const double hl = footprint.length / 2, hw = footprint.width / 2;
  const int nx = static_cast<int>(std::floor(footprint.length / db + 1e-9)) + 1;
  const int ny = static_cast<int>(std::floor(footprint.width / db + 1e-9)) + 1;
  const double w = alpha * db * db / (footprint.length * grid_res * grid_res);
  BodyPointSet set;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      set.points.push_back({-hl + ix * db, -hw + iy * db});
      set.weights.push_back(w);
    }
  }
  return set;
}

Pose rk4_unicycle_step(const Pose& pose, double kappa, double ds) {
  const double a = kappa * ds;
  const double c = std::cos(pose.psi) + 4 * std::cos(pose.psi + a / 2) + std::cos(pose.psi + a);
  const double s = std::sin(pose.psi) + 4 * std::sin(pose.psi + a / 2) + std::sin(pose.psi + a);
  return Pose(pose.x + ds / 6 * c, pose.y + ds / 6 * s, pose.psi + a);
}

std::pair<double, std::vector<double>> nlp_objective(const NlpProblem& problem,
                                                     const std::vector<double>& vars) {
  const int N = problem.N;
  if (N < 2 || !problem.field) throw ConfigError("nlp_objective: bad problem");
  const std::size_t n_eta = 3 * static_cast<std::size_t>(N + 1);
  const std::size_t kap_off = n_eta;
  const std::size_t ds_off = n_eta + static_cast<std::size_t>(N);
  if (vars.size() != ds_off + 1) throw ConfigError("nlp_objective: bad variable count");
  const double ds = vars[ds_off];

  double F = 0.0;
  std::vector<double> grad(vars.size(), 0.0);
  const auto& body = problem.body;

  for (int i = 0; i <= N; ++i) {
    const int ki = std::min(i, N - 1);  // kappa_{N+1} := kappa_N
    const double kappa = vars[kap_off + static_cast<std::size_t>(ki)];
    const double x = vars[3 * static_cast<std::size_t>(i)];
    const double y = vars[3 * static_cast<std::size_t>(i) + 1];
    const double psi = vars[3 * static_cast<std::size_t>(i) + 2];
    const double cp = std::cos(psi), sp = std::sin(psi);
    for (std::size_t j = 0; j < body.points.size(); ++j) {
      const Point2 b = body.points[j];
      const double w = body.weights[j];
      // |dg/ds| collapses to a psi-free expression.
      const double n2 = 1.0 - 2 * kappa * b.y + kappa * kappa * (b.x * b.x + b.y * b.y);
      const double n = std::sqrt(std::max(n2, 1e-12));
      const double dn_dk = (kappa * (b.x * b.x + b.y * b.y) - b.y) / n;
      const double gx = x + cp * b.x - sp * b.y;
      const double gy = y + sp * b.x + cp * b.y;
      const auto [c_obs, gc] = problem.field->eval(gx, gy);
      F += w * c_obs * n * ds;
      grad[3 * static_cast<std::size_t>(i)] += ds * w * n * gc.x;
      grad[3 * static_cast<std::size_t>(i) + 1] += ds * w * n * gc.y;
      const double drx = -sp * b.x - cp * b.y;  // d(R b)/d psi
      const double dry = cp * b.x - sp * b.y;
      grad[3 * static_cast<std::size_t>(i) + 2] += ds * w * n * (gc.x * drx + gc.y * dry);
      grad[kap_off + static_cast<std::size_t>(ki)] += ds * w * c_obs * dn_dk;
      grad[ds_off] += w * c_obs * n;
    }
  }

  F += N * ds;  // L_f
  grad[ds_off] += N;

  for (int i = 0; i + 1 < N; ++i) {
    const double d = (vars[kap_off + static_cast<std::size_t>(i) + 1] -
                      vars[kap_off + static_cast<std::size_t>(i)]) /
                     ds;
    F += problem.lambda * d * d;
    grad[kap_off + static_cast<std::size_t>(i)] -= 2 * problem.lambda * d / ds;
    grad[kap_off + static_cast<std::size_t>(i) + 1] += 2 * problem.lambda * d / ds;
    grad[ds_off] -= 2 * problem.lambda * d * d / ds;
  }
  return {F, std::move(grad)};
}

namespace {

// Resamples a pose polyline at uniform arc spacing, truncated at the first
// crossing of x = x_cut. Returns the samples and the truncated length.
std::pair<std::vector<Pose>, double> resample_to_line(const std::vector<Pose>& poses,
                                                      double x_cut, int n_samples) {
  std::vector<Pose> pts;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < poses.size(); ++i) {
    const Point2 a = poses[i].position(), b = poses[i + 1].position();
    const double seg = (b - a).norm();
    if (poses[i].x < x_cut && poses[i + 1].x >= x_cut) {
      const double t = (x_cut - poses[i].x) / (poses[i + 1].x - poses[i].x);
      total += seg * t;
      break;
    }
    total += seg;
  }
  if (total <= 0) throw InfeasibleWarmStart("warm start does not reach the subgoal line");

  // Walk the polyline emitting n_samples+1 equally spaced poses.
  pts.reserve(static_cast<std::size_t>(n_samples) + 1);
  double target = 0.0;
  const double step = total / n_samples;
  double walked = 0.0;
  std::size_t seg_idx = 0;
  for (int k = 0; k <= n_samples; ++k, target = k * step) {
    while (seg_idx + 1 < poses.size()) {
      const double seg = (poses[seg_idx + 1].position() - poses[seg_idx].position()).norm();
      if (walked + seg >= target - 1e-9 || seg_idx + 2 == poses.size()) break;
      walked += seg;
      ++seg_idx;
    }
    const Point2 a = poses[seg_idx].position();
    const Point2 b = poses[std::min(seg_idx + 1, poses.size() - 1)].position();
    const double seg = (b - a).norm();
    const double t = seg > 1e-12 ? std::clamp((target - walked) / seg, 0.0, 1.0) : 0.0;
    const double dpsi = wrap_to_pi(poses[std::min(seg_idx + 1, poses.size() - 1)].psi -
                                   poses[seg_idx].psi);
    pts.push_back(Pose(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y),
                       poses[seg_idx].psi + t * dpsi));
  }
  return {std::move(pts), total};
}

struct Rollout {
  std::vector<Pose> poses;  // N+1
};

Rollout roll(const Pose& start, const std::vector<double>& kappa, double ds) {
  Rollout r;
  r.poses.reserve(kappa.size() + 1);
  r.poses.push_back(start);
  for (double k : kappa) r.poses.push_back(rk4_unicycle_step(r.poses.back(), k, ds));
  return r;
}

std::vector<double> pack_vars(const Rollout& r, const std::vector<double>& kappa, double ds) {
  std::vector<double> vars;
  vars.reserve(3 * r.poses.size() + kappa.size() + 1);
  for (const auto& p : r.poses) {
    vars.push_back(p.x);
    vars.push_back(p.y);
    vars.push_back(p.psi);
  }
  vars.insert(vars.end(), kappa.begin(), kappa.end());
  vars.push_back(ds);
  return vars;
}

}  // namespace

OptimizedPath optimize_path(const PlannedPath& warm, const CostField& field,
                            const BodyPointSet& body, const OptimizerParams& params) {
  if (warm.poses.size() < 2) throw InfeasibleWarmStart("warm start too short");
  const double kappa_max = 1.0 / params.r_min;

  // Resample the warm start and fit curvatures to it.
  auto probe = resample_to_line(warm.poses, params.x_subgoal, 2);
  const int N = std::max(2, static_cast<int>(std::lround(probe.second / params.ds_init)));
  auto [warm_poses, warm_len] = resample_to_line(warm.poses, params.x_subgoal, N);
  const double ds0 = warm_len / N;
  const double ds_lo = 0.5 * ds0, ds_hi = 2.0 * ds0;

  std::vector<double> kappa(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    kappa[static_cast<std::size_t>(i)] = std::clamp(
        wrap_to_pi(warm_poses[static_cast<std::size_t>(i) + 1].psi -
                   warm_poses[static_cast<std::size_t>(i)].psi) /
            ds0,
        -kappa_max, kappa_max);
  }
  const Pose start = warm_poses.front();
  double ds = ds0;

  NlpProblem problem;
  problem.N = N;
  problem.lambda = params.lambda;
  problem.body = body;
  problem.field = &field;

  const auto terminal_gap = [&](const std::vector<double>& kap, double step) {
    return roll(start, kap, step).poses.back().x - params.x_subgoal;
  };

  // Newton repair of the terminal equality using ds only (the whole path
  // stretches smoothly with ds).
  const auto repair_ds = [&](const std::vector<double>& kap, double& step) {
    for (int it = 0; it < 30; ++it) {
      const double c = terminal_gap(kap, step);
      if (std::fabs(c) <= params.tol_terminal / 2) return true;
      const double h = 1e-6 * std::max(1.0, step);
      const double dc = (terminal_gap(kap, step + h) - terminal_gap(kap, step - h)) / (2 * h);
      if (std::fabs(dc) < 1e-9) return false;
      step = std::clamp(step - c / dc, ds_lo, ds_hi);
    }
    return std::fabs(terminal_gap(kap, step)) <= params.tol_terminal;
  };

  if (!repair_ds(kappa, ds)) {
    throw InfeasibleWarmStart("terminal constraint not repairable from the warm start");
  }

  const auto eval_F = [&](const std::vector<double>& kap, double step) {
    return nlp_objective(problem, pack_vars(roll(start, kap, step), kap, step)).first;
  };

  OptimizedPath best;
  best.warm_objective = eval_F(kappa, ds);
  best.objective = best.warm_objective;
  best.kappas = kappa;
  best.ds = ds;

  // Reduced (single-shooting) gradient of the AL merit via the adjoint sweep.
  double nu = 0.0, mu = 10.0;
  const auto eval_merit = [&](const std::vector<double>& kap, double step, double* c_out) {
    const double c = terminal_gap(kap, step);
    if (c_out) *c_out = c;
    return eval_F(kap, step) + nu * c + 0.5 * mu * c * c;
  };
  const auto reduced_grad = [&](const std::vector<double>& kap, double step,
                                std::vector<double>& gk, double& gds, double* merit_out) {
    const Rollout r = roll(start, kap, step);
    const auto vars = pack_vars(r, kap, step);
    auto [F, g] = nlp_objective(problem, vars);
    const double c = r.poses.back().x - params.x_subgoal;
    const std::size_t kap_off = 3 * static_cast<std::size_t>(N + 1);
    gk.assign(static_cast<std::size_t>(N), 0.0);
    for (int i = 0; i < N; ++i) gk[static_cast<std::size_t>(i)] = g[kap_off + i];
    gds = g[kap_off + static_cast<std::size_t>(N)];
    // Adjoint: lambda_{N+1} from the stage cost plus the constraint term.
    double lx = g[3 * static_cast<std::size_t>(N)] + nu + mu * c;
    double ly = g[3 * static_cast<std::size_t>(N) + 1];
    double lp = g[3 * static_cast<std::size_t>(N) + 2];
    for (int i = N - 1; i >= 0; --i) {
      const Pose& p = r.poses[static_cast<std::size_t>(i)];
      const double k = kap[static_cast<std::size_t>(i)];
      const double a = k * step;
      const double c0 = std::cos(p.psi), c1 = std::cos(p.psi + a / 2), c2 = std::cos(p.psi + a);
      const double s0 = std::sin(p.psi), s1 = std::sin(p.psi + a / 2), s2 = std::sin(p.psi + a);
      const double sum_c = c0 + 4 * c1 + c2, sum_s = s0 + 4 * s1 + s2;
      // Stage Jacobians of the closed-form RK4 map.
      const double dxdpsi = -step / 6 * sum_s, dydpsi = step / 6 * sum_c;
      const double dxdk = -step * step / 6 * (2 * s1 + s2);
      const double dydk = step * step / 6 * (2 * c1 + c2);
      const double dxdds = sum_c / 6 - step * k / 6 * (2 * s1 + s2);
      const double dydds = sum_s / 6 + step * k / 6 * (2 * c1 + c2);
      gk[static_cast<std::size_t>(i)] += lx * dxdk + ly * dydk + lp * step;
      gds += lx * dxdds + ly * dydds + lp * k;
      const double lp_new = g[3 * static_cast<std::size_t>(i) + 2] + lx * dxdpsi + ly * dydpsi + lp;
      lx += g[3 * static_cast<std::size_t>(i)];
      ly += g[3 * static_cast<std::size_t>(i) + 1];
      lp = lp_new;
    }
    if (merit_out) *merit_out = F + nu * c + 0.5 * mu * c * c;
    return c;
  };

  const double pk = 1.0 / (4 * params.lambda / (ds0 * ds0) + 10.0);
  const double pds = 1.0 / (N + 10.0);
  int total_iters = 0;
  bool stationary = false;
  for (int outer = 0; outer < params.max_outer; ++outer) {
    double t = 1.0;
    std::vector<double> gk;
    double gds = 0.0, merit = 0.0;
    double c = reduced_grad(kappa, ds, gk, gds, &merit);
    for (int inner = 0; inner < params.max_inner; ++inner, ++total_iters) {
      // Projected step with Armijo backtracking.
      double decrease_ref = gds * pds * gds;
      for (int i = 0; i < N; ++i) decrease_ref += gk[static_cast<std::size_t>(i)] * pk *
                                                  gk[static_cast<std::size_t>(i)];
      bool accepted = false;
      std::vector<double> kap_try(static_cast<std::size_t>(N));
      double ds_try = ds, merit_try = 0.0;
      for (int bt = 0; bt < 30; ++bt) {
        for (int i = 0; i < N; ++i) {
          kap_try[static_cast<std::size_t>(i)] = std::clamp(
              kappa[static_cast<std::size_t>(i)] - t * pk * gk[static_cast<std::size_t>(i)],
              -kappa_max, kappa_max);
        }
        ds_try = std::clamp(ds - t * pds * gds, ds_lo, ds_hi);
        merit_try = eval_merit(kap_try, ds_try, nullptr);
        if (merit_try <= merit - 1e-4 * t * decrease_ref) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) {
        stationary = true;
        break;
      }
      double step_norm = std::fabs(ds_try - ds);
      for (int i = 0; i < N; ++i) {
        step_norm = std::max(step_norm, std::fabs(kap_try[static_cast<std::size_t>(i)] -
                                                  kappa[static_cast<std::size_t>(i)]));
      }
      kappa.swap(kap_try);
      ds = ds_try;
      c = reduced_grad(kappa, ds, gk, gds, &merit);
      if (params.verbose) {
        std::fprintf(stderr, "{\"iter\":%d,\"objective\":%.9g,\"max_residual\":%.3g,\"step_norm\":%.3g}\n",
                     total_iters, merit, std::fabs(c), step_norm);
      }
      t = std::min(t * 2.0, 1e6);
      if (step_norm < 1e-10) {
        stationary = true;
        break;
      }
    }
    // Candidate iterate: repair feasibility, keep if it improves F.
    std::vector<double> kap_f = kappa;
    double ds_f = ds;
    if (repair_ds(kap_f, ds_f)) {
      const double Ff = eval_F(kap_f, ds_f);
      if (Ff <= best.objective) {
        best.objective = Ff;
        best.kappas = kap_f;
        best.ds = ds_f;
      }
    }
    if (stationary && std::fabs(c) <= params.tol_terminal) break;
    nu += mu * c;
    if (std::fabs(c) > params.tol_terminal) mu *= 10.0;
    stationary = false;
  }

  best.poses = roll(start, best.kappas, best.ds).poses;
  best.iterations = total_iters;
  best.status = stationary ? SolveStatus::Converged : SolveStatus::MaxIter;
  if (std::fabs(best.poses.back().x - params.x_subgoal) > params.tol_terminal) {
    best.status = SolveStatus::Infeasible;
  }
  if (params.y_max > params.y_min) {
    for (const auto& p : best.poses) {
      if (p.y < params.y_min || p.y > params.y_max) best.status = SolveStatus::Infeasible;
    }
  }
  return best;
}

}  // namespace icenav
