#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icenav/navigation.hpp"
#include "icenav/physics.hpp"

namespace icenav {

struct TrajSample {
  double t = 0.0;
  Pose eta;
  double u = 0.0, v = 0.0, r = 0.0;
  std::array<double, 3> tau{};      // realized (post-saturation) wrench
  std::array<double, 3> tau_env{};  // aggregated ice forces, body frame
  Pose setpoint;
};

/// Sampled centroid track of one floe plus its membership in the pushed set
/// (connected to the ship through the contact graph at any sample time).
struct FloeTrack {
  int id = 0;
  double mass = 0.0;
  double dt = 0.5;
  bool pushed = false;
  std::vector<Point2> positions;
  std::vector<Point2> velocities;
};

struct Metrics {
  double mean_ice_mass = 0.0;      // over distinct floes contacted
  double max_impact_force = 0.0;   // impulse / dt_sim
  double mean_impact_force = 0.0;
  double dk_ship_total = 0.0;      // total kinetic-energy loss of the ship, J (>= 0)
  double energy = 0.0;             // E, J
  double total_time = 0.0;
  double path_length = 0.0;
  double mean_cross_track = 0.0;
  double mean_heading_error = 0.0;  // rad
  double w1 = 0.0, w2 = 0.0, w3 = 0.0;
};

struct TrialConfig {
  NavConfig nav;
  double dt_ctrl = 0.02;
  double dt_sim = 0.005;
  double timeout_factor = 3.0;      // x straight-line nominal transit time
  double sample_dt = 0.5;           // floe-track / pushed-set sampling
  double control_bandwidth = 0.05;  // DP pole-placement bandwidth, rad/s
  double setpoint_lead = 10.0;      // max arc lead of the setpoint over the ship, m
  double setpoint_lateral = 3.0;    // max lateral offset of the setpoint from the ship, m
};

struct TrialRecord {
  unsigned seed = 0;
  std::string planner;
  double concentration = 0.0;
  Metrics metrics;
  double collision_cost = 0.0;  // C_f of the straight path on the initial costmap
  std::vector<TrajSample> trajectory;
  std::vector<CollisionEvent> events;
  std::vector<FloeTrack> floe_tracks;
};

/// Closed-loop trial: plan -> track -> physics until the ship clears the
/// field. Throws TrialTimeout past timeout_factor x the nominal straight
/// transit, PlanningFailure from the planner.
TrialRecord run_trial(const IceField& field, const std::string& planner, const TrialConfig& cfg,
                      unsigned seed = 0);

Metrics compute_metrics(const std::vector<TrajSample>& trajectory,
                        const std::vector<CollisionEvent>& events, const TrialConfig& cfg);

/// (W1, W2, W3) over the pushed set: positive-part power integral, max-speed
/// KE gain, and mass-weighted arc length.
std::array<double, 3> work_metrics(const std::vector<FloeTrack>& tracks);

/// Eq. of the cost-weight calibration: per-trial alpha from Straight-planner
/// records, averaged. Throws CalibrationError on dK >= E or zero collision
/// cost.
double calibrate_alpha(const std::vector<TrialRecord>& straight_trials);

struct ExperimentSpec {
  ExperimentSpec() {
    field_template.min_width = 2.0;  // desk-scale width-truncation window
    field_template.max_width = 40.0;
  }

  std::vector<double> concentrations{0.3};
  int fields_per_concentration = 10;
  std::vector<std::string> planners{"auto-icenav", "straight", "skeleton"};
  FieldSpec field_template;
  TrialConfig trial;
  unsigned base_seed = 1;
  int threads = 0;  // 0: ICENAV_THREADS or hardware concurrency
  std::string output_dir = "results";
  bool write_plots = true;
};

struct SummaryRow {
  double concentration = 0.0;
  std::string planner;
  int trials = 0;
  int failures = 0;
  Metrics means;
  double success_rate = 0.0;  // % of fields with strictly lowest mean AND max impact
};

/// Runs the full grid (concentration x field x planner), writes
/// output_dir/summary.csv, output_dir/trials/*.json and output_dir/plots/*.svg,
/// and returns the summary rows. Individual trial failures are recorded and
/// skipped, not fatal.
std::vector<SummaryRow> run_batch(const ExperimentSpec& spec);

/// Parallelism cap: explicit request, else ICENAV_THREADS, else hardware.
int thread_budget(int requested);

/// Desk-scale preset used by the batch defaults and the CLI.
TrialConfig desk_trial_config();

nlohmann::json trial_to_json(const TrialRecord& record);
nlohmann::json experiment_spec_to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_spec_from_json(const nlohmann::json& j);

}  // namespace icenav
