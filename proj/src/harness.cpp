#include "icenav/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <thread>

#include "icenav/errors.hpp"

namespace icenav {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

IceField field_from_world(const SimWorld& world, const IceField& base) {
  IceField out;
  out.channel_length = base.channel_length;
  out.channel_width = base.channel_width;
  out.concentration = base.concentration;
  for (const auto& body : world.floes) {
    IceFloe f;
    f.polygon = body.world_poly();
    const auto props = polygon_properties(f.polygon);
    f.area = props.area;
    f.centroid = props.centroid;
    f.bounding_radius = props.bounding_radius;
    f.thickness = body.thickness;
    f.density = body.density;
    f.mass = body.mass;
    f.id = body.id;
    out.floes.push_back(std::move(f));
  }
  return out;
}

std::vector<double> arc_table(const std::vector<Pose>& path) {
  std::vector<double> cum{0.0};
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    cum.push_back(cum.back() +
                  std::hypot(path[i + 1].x - path[i].x, path[i + 1].y - path[i].y));
  return cum;
}

Pose pose_at_arc(const std::vector<Pose>& path, const std::vector<double>& cum, double s) {
  if (path.size() == 1 || s <= 0) return path.front();
  if (s >= cum.back()) return path.back();
  const auto it = std::upper_bound(cum.begin(), cum.end(), s);
  const std::size_t i = std::min<std::size_t>(it - cum.begin() - 1, path.size() - 2);
  const double seg = cum[i + 1] - cum[i];
  const double f = seg > 1e-12 ? (s - cum[i]) / seg : 0.0;
  const double x = path[i].x + f * (path[i + 1].x - path[i].x);
  const double y = path[i].y + f * (path[i + 1].y - path[i].y);
  const double psi = seg > 1e-12
                         ? std::atan2(path[i + 1].y - path[i].y, path[i + 1].x - path[i].x)
                         : path[i].psi;
  return Pose(x, y, psi);
}

double nearest_arc(const std::vector<Pose>& path, const std::vector<double>& cum,
                   const Point2& p) {
  double best = 0.0, best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Point2 a = path[i].position(), b = path[i + 1].position();
    const Point2 ab = b - a;
    const double len2 = ab.dot(ab);
    const double t = len2 > 1e-18 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    const Point2 q = a + ab * t;
    const double d = (p - q).norm();
    if (d < best_d) {
      best_d = d;
      best = cum[i] + t * std::sqrt(len2);
    }
  }
  return best;
}

}  // namespace

TrialRecord run_trial(const IceField& field, const std::string& planner, const TrialConfig& cfg,
                      unsigned seed) {
  NavConfig nav = cfg.nav;
  nav.x_goal = field.channel_length;
  if (planner == "auto-stage1") nav.refine = false;
  const bool is_auto = planner == "auto-icenav" || planner == "auto-stage1";
  if (!is_auto && planner != "straight" && planner != "skeleton")
    throw ConfigError("run_trial: unknown planner '" + planner + "'");

  const Pose start(-100.0, field.channel_width / 2, 0.0);
  const VesselModel vessel = make_default_vessel(nav.ship_mass, nav.footprint);
  const DpGains gains = pole_placement_gains(vessel, cfg.control_bandwidth);
  SimWorld world = make_world(field, nav.footprint, nav.ship_mass, cfg.dt_sim);
  world.ship_pose = start;
  ShipState state;
  state.eta = start;

  std::optional<ControlSet> control_set;
  if (is_auto)
    control_set = generate_control_set(nav.lattice, nav.footprint, nav.costmap.grid_resolution);

  TrialRecord rec;
  rec.seed = seed;
  rec.planner = planner;
  rec.concentration = field.concentration;
  for (const auto& f : world.floes) {
    FloeTrack track;
    track.id = f.id;
    track.mass = f.mass;
    track.dt = cfg.sample_dt;
    rec.floe_tracks.push_back(std::move(track));
  }

  {
    // C_f of the straight path on the initial costmap (calibration input).
    const Costmap map0 = build_costmap(field, nav.u_nom, nav.ship_mass, nav.costmap);
    const NavPlan straight = run_straight(start, 0.0, nav);
    rec.collision_cost = swath_cost(swath_trace(straight.path, nav.footprint, map0.grid), map0);
  }

  const double nominal = (nav.x_goal - start.x) / nav.u_nom + nav.u_nom / (2 * nav.profile_accel);
  const double timeout = cfg.timeout_factor * nominal;

  NavPlan plan;
  bool have_plan = false;
  std::vector<double> cum;
  double s0 = 0.0, t_plan = 0.0, next_replan = 0.0, next_sample = 0.0;
  Eigen::Vector3d tau_env = Eigen::Vector3d::Zero();

  for (long k = 0;; ++k) {
    const double t = k * cfg.dt_ctrl;
    if (state.eta.x >= nav.x_goal) break;
    if (t > timeout) throw TrialTimeout("run_trial: exceeded " + fmt(timeout) + " s");

    if (t >= next_replan - 1e-9) {
      const double speed = state.speed();
      if (planner == "straight") {
        plan = run_straight(start, speed, nav);
      } else if (planner == "skeleton") {
        if (!have_plan)
          plan = run_skeleton(start, speed, field, nav);
        else
          plan.profile = make_velocity_profile(std::min(speed, nav.u_nom), nav.u_nom,
                                               nav.profile_accel);
      } else {
        const IceField now = field_from_world(world, field);
        plan = auto_icenav_iteration(state.eta, speed, now, *control_set, nav,
                                     have_plan ? &plan : nullptr);
      }
      cum = arc_table(plan.path);
      s0 = nearest_arc(plan.path, cum, state.eta.position());
      t_plan = t;
      next_replan += nav.delta_t;
      have_plan = true;
    }

    // Cap the carrot's lead over the ship's own path projection: when ice
    // slows the ship, an open-loop profile setpoint runs away along the path
    // and turns speed deficit into cross-track/heading error, which the
    // controller then fights with hard maneuvers into the floes.
    const double s_ship = nearest_arc(plan.path, cum, state.eta.position());
    const double s = std::min({s0 + plan.profile.distance_at(t - t_plan),
                               s_ship + cfg.setpoint_lead, cum.back()});
    Pose setpoint = pose_at_arc(plan.path, cum, s);
    // When ice shoves the ship off the path, rejoin gradually: cap the
    // reference's lateral offset so the controller nudges back instead of
    // shoving sideways into the floe field at full thrust.
    {
      const Point2 n{-std::sin(setpoint.psi), std::cos(setpoint.psi)};
      const double e_lat = n.dot(state.eta.position() - setpoint.position());
      const double excess = e_lat - std::clamp(e_lat, -cfg.setpoint_lateral, cfg.setpoint_lateral);
      if (excess != 0.0)
        setpoint = Pose(setpoint.x + n.x * excess, setpoint.y + n.y * excess, setpoint.psi);
    }
    const double sp_speed = plan.profile.speed_at(t - t_plan);

    const Eigen::Vector3d tau = dp_control(state, setpoint, sp_speed, gains, vessel);
    const Allocation alloc = allocate_thrust(tau, vessel);
    state = step_vessel(state, alloc.realized, tau_env, vessel, cfg.dt_ctrl);

    const double cp = std::cos(state.eta.psi), sp = std::sin(state.eta.psi);
    const Point2 vel_world{cp * state.nu(0) - sp * state.nu(1),
                           sp * state.nu(0) + cp * state.nu(1)};
    const StepResult phys = step_world(world, state.eta, vel_world, state.nu(2), cfg.dt_ctrl);
    tau_env << phys.tau_env_x, phys.tau_env_y, phys.tau_env_n;
    rec.events.insert(rec.events.end(), phys.events.begin(), phys.events.end());

    TrajSample sample;
    sample.t = t + cfg.dt_ctrl;
    sample.eta = state.eta;
    sample.u = state.nu(0);
    sample.v = state.nu(1);
    sample.r = state.nu(2);
    sample.tau = {alloc.realized(0), alloc.realized(1), alloc.realized(2)};
    sample.tau_env = {phys.tau_env_x, phys.tau_env_y, phys.tau_env_n};
    sample.setpoint = setpoint;
    rec.trajectory.push_back(sample);

    if (t >= next_sample - 1e-9) {
      for (std::size_t i = 0; i < world.floes.size(); ++i) {
        rec.floe_tracks[i].positions.push_back(world.floes[i].position);
        rec.floe_tracks[i].velocities.push_back(world.floes[i].velocity);
      }
      // Pushed set: floes connected to the ship through the contact graph.
      const auto contacts = detect_contacts(world);
      std::vector<std::vector<int>> adj(world.floes.size());
      std::vector<int> frontier;
      std::vector<char> seen(world.floes.size(), 0);
      for (const auto& c : contacts) {
        if (c.a == Contact::kShip && c.b >= 0) {
          if (!seen[c.b]) {
            seen[c.b] = 1;
            frontier.push_back(c.b);
          }
        } else if (c.a >= 0 && c.b >= 0) {
          adj[c.a].push_back(c.b);
          adj[c.b].push_back(c.a);
        }
      }
      while (!frontier.empty()) {
        const int i = frontier.back();
        frontier.pop_back();
        rec.floe_tracks[i].pushed = true;
        for (int j : adj[i])
          if (!seen[j]) {
            seen[j] = 1;
            frontier.push_back(j);
          }
      }
      next_sample += cfg.sample_dt;
    }
  }

  rec.metrics = compute_metrics(rec.trajectory, rec.events, cfg);
  const auto w = work_metrics(rec.floe_tracks);
  rec.metrics.w1 = w[0];
  rec.metrics.w2 = w[1];
  rec.metrics.w3 = w[2];
  return rec;
}

Metrics compute_metrics(const std::vector<TrajSample>& trajectory,
                        const std::vector<CollisionEvent>& events, const TrialConfig& cfg) {
  Metrics m;
  double ct_sum = 0, hdg_sum = 0;
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const TrajSample& s = trajectory[i];
    m.energy += cfg.dt_ctrl * (std::fabs(s.u) * std::fabs(s.tau[0]) +
                               std::fabs(s.v) * std::fabs(s.tau[1]) +
                               std::fabs(s.r) * std::fabs(s.tau[2]));
    if (i > 0) {
      m.path_length += std::hypot(s.eta.x - trajectory[i - 1].eta.x,
                                  s.eta.y - trajectory[i - 1].eta.y);
    }
    const Point2 err = s.eta.position() - s.setpoint.position();
    ct_sum += std::fabs(-std::sin(s.setpoint.psi) * err.x + std::cos(s.setpoint.psi) * err.y);
    hdg_sum += std::fabs(wrap_to_pi(s.eta.psi - s.setpoint.psi));
  }
  if (!trajectory.empty()) {
    m.total_time = trajectory.back().t;
    m.mean_cross_track = ct_sum / trajectory.size();
    m.mean_heading_error = hdg_sum / trajectory.size();
  }

  std::vector<std::pair<int, double>> masses;  // distinct floes contacted
  double force_sum = 0;
  for (const auto& ev : events) {
    const double force = ev.impulse / cfg.dt_sim;
    m.max_impact_force = std::max(m.max_impact_force, force);
    force_sum += force;
    m.dk_ship_total += ev.dk_ice - ev.dk_sys;
    masses.emplace_back(ev.floe_id, ev.floe_mass);
  }
  if (!events.empty()) m.mean_impact_force = force_sum / events.size();
  std::sort(masses.begin(), masses.end());
  masses.erase(std::unique(masses.begin(), masses.end(),
                           [](const auto& a, const auto& b) { return a.first == b.first; }),
               masses.end());
  if (!masses.empty()) {
    double acc = 0;
    for (const auto& [id, mass] : masses) acc += mass;
    m.mean_ice_mass = acc / masses.size();
  }
  return m;
}

std::array<double, 3> work_metrics(const std::vector<FloeTrack>& tracks) {
  double w1 = 0, w2 = 0, w3 = 0;
  for (const auto& track : tracks) {
    if (!track.pushed || track.velocities.size() < 2) continue;
    double max_ke = 0;
    const double ke0 = 0.5 * track.mass * track.velocities.front().dot(track.velocities.front());
    for (const auto& v : track.velocities) max_ke = std::max(max_ke, 0.5 * track.mass * v.dot(v));
    w2 += max_ke - ke0;
    for (std::size_t k = 0; k + 1 < track.velocities.size(); ++k) {
      // Midpoint-velocity power: the positive part of the per-step KE change.
      const Point2& a = track.velocities[k];
      const Point2& b = track.velocities[k + 1];
      const double dke = 0.5 * track.mass * (b.dot(b) - a.dot(a));
      w1 += std::max(0.0, dke);
      w3 += track.mass * (track.positions[k + 1] - track.positions[k]).norm();
    }
  }
  return {w1, w2, w3};
}

double calibrate_alpha(const std::vector<TrialRecord>& straight_trials) {
  if (straight_trials.empty()) throw CalibrationError("calibrate_alpha: no trials");
  double acc = 0;
  for (const auto& rec : straight_trials) {
    const double e = rec.metrics.energy;
    const double dk = rec.metrics.dk_ship_total;
    if (e <= 0 || dk >= e)
      throw CalibrationError("calibrate_alpha: requires 0 <= dK_ship < E");
    const double ratio = dk / e;
    if (ratio == 0) continue;  // contributes alpha_i = 0
    if (rec.collision_cost <= 0)
      throw CalibrationError("calibrate_alpha: straight path has zero collision cost");
    acc += ratio * rec.metrics.path_length / (rec.collision_cost * (1.0 - ratio));
  }
  return acc / straight_trials.size();
}

int thread_budget(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ICENAV_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

TrialConfig desk_trial_config() {
  TrialConfig cfg;
  cfg.nav.delta_h = 150.0;
  cfg.nav.lattice.spacing = 10.0;
  cfg.nav.lattice.r_min = 30.0;
  cfg.nav.costmap.kernel_size = 25;
  return cfg;
}

namespace {

nlohmann::json metrics_to_json(const Metrics& m) {
  return {{"mean_ice_mass", m.mean_ice_mass},
          {"max_impact_force", m.max_impact_force},
          {"mean_impact_force", m.mean_impact_force},
          {"dk_ship_total", m.dk_ship_total},
          {"energy", m.energy},
          {"total_time", m.total_time},
          {"path_length", m.path_length},
          {"mean_cross_track", m.mean_cross_track},
          {"mean_heading_error", m.mean_heading_error},
          {"w1", m.w1},
          {"w2", m.w2},
          {"w3", m.w3}};
}

void write_svg_trajectories(const std::string& path, const IceField& field,
                            const std::vector<const TrialRecord*>& records) {
  const double scale = 2.0, margin = 20.0;
  const double w = (field.channel_length + 200) * scale / 2 + 2 * margin;
  const double h = field.channel_width * scale + 2 * margin;
  auto X = [&](double x) { return margin + (x + 100) * scale / 2; };
  auto Y = [&](double y) { return h - margin - y * scale; };
  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"#eef4f8\"/>\n";
  for (const auto& floe : field.floes) {
    out << "<polygon points=\"";
    for (const auto& v : floe.polygon.vertices) out << X(v.x) << "," << Y(v.y) << " ";
    out << "\" fill=\"#cfd8dc\" stroke=\"#90a4ae\" stroke-width=\"0.5\"/>\n";
  }
  const char* colors[] = {"#d32f2f", "#1976d2", "#388e3c", "#f57c00"};
  int ci = 0;
  for (const TrialRecord* rec : records) {
    out << "<polyline fill=\"none\" stroke=\"" << colors[ci % 4] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < rec->trajectory.size(); i += 25)
      out << X(rec->trajectory[i].eta.x) << "," << Y(rec->trajectory[i].eta.y) << " ";
    out << "\"/>\n<text x=\"" << margin << "\" y=\"" << 12 + 14 * ci << "\" fill=\""
        << colors[ci % 4] << "\" font-size=\"11\">" << rec->planner << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
}

void write_svg_impacts(const std::string& path, const std::vector<std::string>& planners,
                       const std::vector<std::vector<double>>& max_forces) {
  double peak = 1.0;
  for (const auto& col : max_forces)
    for (double f : col) peak = std::max(peak, f);
  const double w = 120.0 * planners.size() + 60, h = 260;
  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  for (std::size_t p = 0; p < planners.size(); ++p) {
    const double x0 = 60 + 120.0 * p;
    for (std::size_t i = 0; i < max_forces[p].size(); ++i) {
      const double y = 220 - 190 * (max_forces[p][i] / peak);
      out << "<circle cx=\"" << x0 + 8.0 * i << "\" cy=\"" << y
          << "\" r=\"3\" fill=\"#1976d2\"/>\n";
    }
    out << "<text x=\"" << x0 << "\" y=\"245\" font-size=\"11\">" << planners[p] << "</text>\n";
  }
  out << "<text x=\"8\" y=\"20\" font-size=\"11\">max impact force (peak " << fmt(peak)
      << " N)</text>\n</svg>\n";
}

}  // namespace

nlohmann::json trial_to_json(const TrialRecord& record) {
  nlohmann::json j;
  j["seed"] = record.seed;
  j["planner"] = record.planner;
  j["concentration"] = record.concentration;
  j["collision_cost"] = record.collision_cost;
  j["metrics"] = metrics_to_json(record.metrics);
  j["event_count"] = record.events.size();
  nlohmann::json events = nlohmann::json::array();
  const std::size_t stride = std::max<std::size_t>(1, record.events.size() / 2000);
  for (std::size_t i = 0; i < record.events.size(); i += stride) {
    const auto& ev = record.events[i];
    events.push_back({{"t", ev.time},
                      {"floe_id", ev.floe_id},
                      {"impulse", ev.impulse},
                      {"floe_mass", ev.floe_mass},
                      {"dk_sys", ev.dk_sys},
                      {"dk_ice", ev.dk_ice},
                      {"contact", {ev.contact_body.x, ev.contact_body.y}}});
  }
  j["events"] = std::move(events);
  nlohmann::json traj = nlohmann::json::array();
  for (std::size_t i = 0; i < record.trajectory.size(); i += 50) {  // 1 Hz
    const auto& s = record.trajectory[i];
    traj.push_back({{"t", s.t},
                    {"x", s.eta.x},
                    {"y", s.eta.y},
                    {"psi", s.eta.psi},
                    {"u", s.u},
                    {"v", s.v},
                    {"r", s.r}});
  }
  j["trajectory"] = std::move(traj);
  return j;
}

nlohmann::json experiment_spec_to_json(const ExperimentSpec& spec) {
  nlohmann::json j;
  j["concentrations"] = spec.concentrations;
  j["fields_per_concentration"] = spec.fields_per_concentration;
  j["planners"] = spec.planners;
  j["base_seed"] = spec.base_seed;
  j["threads"] = spec.threads;
  j["output_dir"] = spec.output_dir;
  j["write_plots"] = spec.write_plots;
  j["channel"] = {spec.field_template.channel_length, spec.field_template.channel_width};
  j["width_window"] = {spec.field_template.min_width, spec.field_template.max_width};
  j["nav"] = {{"delta_h", spec.trial.nav.delta_h},
              {"delta_t", spec.trial.nav.delta_t},
              {"u_nom", spec.trial.nav.u_nom},
              {"alpha", spec.trial.nav.alpha},
              {"eps_switch", spec.trial.nav.eps_switch},
              {"lattice_spacing", spec.trial.nav.lattice.spacing},
              {"r_min", spec.trial.nav.lattice.r_min},
              {"kernel_size", spec.trial.nav.costmap.kernel_size}};
  j["timeout_factor"] = spec.trial.timeout_factor;
  return j;
}

ExperimentSpec experiment_spec_from_json(const nlohmann::json& j) {
  ExperimentSpec spec;
  spec.trial = desk_trial_config();
  if (j.contains("concentrations")) spec.concentrations = j["concentrations"].get<std::vector<double>>();
  if (j.contains("fields_per_concentration")) spec.fields_per_concentration = j["fields_per_concentration"];
  if (j.contains("planners")) spec.planners = j["planners"].get<std::vector<std::string>>();
  if (j.contains("base_seed")) spec.base_seed = j["base_seed"];
  if (j.contains("threads")) spec.threads = j["threads"];
  if (j.contains("output_dir")) spec.output_dir = j["output_dir"];
  if (j.contains("write_plots")) spec.write_plots = j["write_plots"];
  if (j.contains("channel")) {
    spec.field_template.channel_length = j["channel"][0];
    spec.field_template.channel_width = j["channel"][1];
  }
  if (j.contains("width_window")) {
    spec.field_template.min_width = j["width_window"][0];
    spec.field_template.max_width = j["width_window"][1];
  }
  if (j.contains("nav")) {
    const auto& n = j["nav"];
    if (n.contains("delta_h")) spec.trial.nav.delta_h = n["delta_h"];
    if (n.contains("delta_t")) spec.trial.nav.delta_t = n["delta_t"];
    if (n.contains("u_nom")) spec.trial.nav.u_nom = n["u_nom"];
    if (n.contains("alpha")) spec.trial.nav.alpha = n["alpha"];
    if (n.contains("eps_switch")) spec.trial.nav.eps_switch = n["eps_switch"];
    if (n.contains("lattice_spacing")) spec.trial.nav.lattice.spacing = n["lattice_spacing"];
    if (n.contains("r_min")) spec.trial.nav.lattice.r_min = n["r_min"];
    if (n.contains("kernel_size")) spec.trial.nav.costmap.kernel_size = n["kernel_size"];
  }
  if (j.contains("timeout_factor")) spec.trial.timeout_factor = j["timeout_factor"];
  return spec;
}

std::vector<SummaryRow> run_batch(const ExperimentSpec& spec) {
  if (spec.planners.empty() || spec.fields_per_concentration < 1 || spec.concentrations.empty())
    throw ConfigError("run_batch: need >= 1 planner, field, and concentration");
  namespace fs = std::filesystem;
  fs::create_directories(spec.output_dir + "/trials");
  if (spec.write_plots) fs::create_directories(spec.output_dir + "/plots");

  struct Job {
    std::size_t ci, fi, pi;
  };
  std::vector<Job> jobs;
  std::vector<IceField> fields;  // [ci * fields_per + fi]
  for (std::size_t ci = 0; ci < spec.concentrations.size(); ++ci)
    for (int fi = 0; fi < spec.fields_per_concentration; ++fi) {
      FieldSpec fspec = spec.field_template;
      fspec.target_concentration = spec.concentrations[ci];
      const unsigned seed = spec.base_seed + 100 * static_cast<unsigned>(ci) + fi;
      fields.push_back(generate_field(fspec, seed));
      for (std::size_t pi = 0; pi < spec.planners.size(); ++pi)
        jobs.push_back({ci, static_cast<std::size_t>(fi), pi});
    }

  std::vector<std::optional<TrialRecord>> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= jobs.size()) return;
      const Job& job = jobs[k];
      const IceField& field = fields[job.ci * spec.fields_per_concentration + job.fi];
      const unsigned seed = spec.base_seed + 100 * static_cast<unsigned>(job.ci) +
                            static_cast<unsigned>(job.fi);
      try {
        results[k] = run_trial(field, spec.planners[job.pi], spec.trial, seed);
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };
  const int n_threads = std::min<int>(thread_budget(spec.threads), static_cast<int>(jobs.size()));
  std::vector<std::thread> pool;
  for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  // Per-trial JSON (persisted even when other trials failed).
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const Job& job = jobs[k];
    char name[128];
    std::snprintf(name, sizeof(name), "c%02d_f%02zu_%s.json",
                  static_cast<int>(std::lround(spec.concentrations[job.ci] * 100)), job.fi,
                  spec.planners[job.pi].c_str());
    std::ofstream out(spec.output_dir + "/trials/" + name);
    if (results[k]) {
      out << trial_to_json(*results[k]).dump(1) << "\n";
    } else {
      out << nlohmann::json{{"planner", spec.planners[job.pi]},
                            {"error", errors[k]}}
                 .dump(1)
          << "\n";
    }
  }

  auto record_at = [&](std::size_t ci, std::size_t fi, std::size_t pi)
      -> const std::optional<TrialRecord>& {
    const std::size_t base =
        (ci * spec.fields_per_concentration + fi) * spec.planners.size();
    return results[base + pi];
  };

  std::vector<SummaryRow> rows;
  for (std::size_t ci = 0; ci < spec.concentrations.size(); ++ci) {
    for (std::size_t pi = 0; pi < spec.planners.size(); ++pi) {
      SummaryRow row;
      row.concentration = spec.concentrations[ci];
      row.planner = spec.planners[pi];
      Metrics acc;
      int wins = 0, decided_fields = 0;
      for (int fi = 0; fi < spec.fields_per_concentration; ++fi) {
        const auto& rec = record_at(ci, fi, pi);
        if (!rec) {
          ++row.failures;
          continue;
        }
        ++row.trials;
        const Metrics& m = rec->metrics;
        acc.mean_ice_mass += m.mean_ice_mass;
        acc.max_impact_force += m.max_impact_force;
        acc.mean_impact_force += m.mean_impact_force;
        acc.dk_ship_total += m.dk_ship_total;
        acc.energy += m.energy;
        acc.total_time += m.total_time;
        acc.path_length += m.path_length;
        acc.mean_cross_track += m.mean_cross_track;
        acc.mean_heading_error += m.mean_heading_error;
        acc.w1 += m.w1;
        acc.w2 += m.w2;
        acc.w3 += m.w3;
        // Success: strictly lowest mean AND max impact among all planners on
        // this field (fields with any failed trial are excluded).
        bool all_present = true, strict = spec.planners.size() > 1;
        for (std::size_t pj = 0; pj < spec.planners.size() && all_present; ++pj) {
          if (pj == pi) continue;
          const auto& other = record_at(ci, fi, pj);
          if (!other) {
            all_present = false;
            break;
          }
          if (!(m.mean_impact_force < other->metrics.mean_impact_force &&
                m.max_impact_force < other->metrics.max_impact_force))
            strict = false;
        }
        if (all_present) {
          ++decided_fields;
          if (strict || spec.planners.size() == 1) ++wins;
        }
      }
      if (row.trials > 0) {
        const double n = row.trials;
        row.means.mean_ice_mass = acc.mean_ice_mass / n;
        row.means.max_impact_force = acc.max_impact_force / n;
        row.means.mean_impact_force = acc.mean_impact_force / n;
        row.means.dk_ship_total = acc.dk_ship_total / n;
        row.means.energy = acc.energy / n;
        row.means.total_time = acc.total_time / n;
        row.means.path_length = acc.path_length / n;
        row.means.mean_cross_track = acc.mean_cross_track / n;
        row.means.mean_heading_error = acc.mean_heading_error / n;
        row.means.w1 = acc.w1 / n;
        row.means.w2 = acc.w2 / n;
        row.means.w3 = acc.w3 / n;
      }
      if (decided_fields > 0) row.success_rate = 100.0 * wins / decided_fields;
      rows.push_back(std::move(row));
    }
  }

  {
    std::ofstream csv(spec.output_dir + "/summary.csv");
    csv << "concentration,planner,trials,failures,success_rate_pct,mean_ice_mass_kg,"
           "max_impact_force_n,mean_impact_force_n,dk_ship_j,energy_j,total_time_s,"
           "path_length_m,mean_cross_track_m,mean_heading_error_rad,w1_j,w2_j,w3_kgm,note\n";
    for (const auto& row : rows) {
      csv << fmt(row.concentration) << "," << row.planner << "," << row.trials << ","
          << row.failures << "," << fmt(row.success_rate) << "," << fmt(row.means.mean_ice_mass)
          << "," << fmt(row.means.max_impact_force) << "," << fmt(row.means.mean_impact_force)
          << "," << fmt(row.means.dk_ship_total) << "," << fmt(row.means.energy) << ","
          << fmt(row.means.total_time) << "," << fmt(row.means.path_length) << ","
          << fmt(row.means.mean_cross_track) << "," << fmt(row.means.mean_heading_error) << ","
          << fmt(row.means.w1) << "," << fmt(row.means.w2) << "," << fmt(row.means.w3) << ","
          << (spec.planners.size() == 1 ? "degenerate_single_planner" : "") << "\n";
    }
  }

  if (spec.write_plots) {
    for (std::size_t ci = 0; ci < spec.concentrations.size(); ++ci) {
      const int conc_pct = static_cast<int>(std::lround(spec.concentrations[ci] * 100));
      std::vector<std::vector<double>> max_forces(spec.planners.size());
      for (std::size_t pi = 0; pi < spec.planners.size(); ++pi)
        for (int fi = 0; fi < spec.fields_per_concentration; ++fi)
          if (const auto& rec = record_at(ci, fi, pi))
            max_forces[pi].push_back(rec->metrics.max_impact_force);
      char name[96];
      std::snprintf(name, sizeof(name), "/plots/impact_forces_c%02d.svg", conc_pct);
      write_svg_impacts(spec.output_dir + name, spec.planners, max_forces);

      std::vector<const TrialRecord*> recs;
      for (std::size_t pi = 0; pi < spec.planners.size(); ++pi)
        if (const auto& rec = record_at(ci, 0, pi)) recs.push_back(&*rec);
      std::snprintf(name, sizeof(name), "/plots/trajectories_c%02d_f00.svg", conc_pct);
      write_svg_trajectories(spec.output_dir + name,
                             fields[ci * spec.fields_per_concentration], recs);
    }
  }
  return rows;
}

}  // namespace icenav
