#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "icenav/errors.hpp"
#include "icenav/harness.hpp"
#include "icenav/icefield.hpp"

namespace {

using namespace icenav;

ExperimentSpec load_spec(const std::string& path) {
  if (path.empty()) {
    ExperimentSpec spec;
    spec.trial = desk_trial_config();
    return spec;
  }
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open spec file: " + path);
  nlohmann::json j;
  in >> j;
  return experiment_spec_from_json(j);
}

int cmd_gen_fields(const std::string& out_dir, int count, std::vector<double> concentrations,
                   unsigned seed, const FieldSpec& tmpl) {
  if (concentrations.empty()) concentrations = {0.3, 0.5};
  std::filesystem::create_directories(out_dir);
  for (std::size_t ci = 0; ci < concentrations.size(); ++ci) {
    for (int fi = 0; fi < count; ++fi) {
      FieldSpec spec = tmpl;
      spec.target_concentration = concentrations[ci];
      const unsigned s = seed + 100 * static_cast<unsigned>(ci) + fi;
      const IceField field = generate_field(spec, s);
      char name[96];
      std::snprintf(name, sizeof(name), "field_c%02d_s%u.json",
                    static_cast<int>(std::lround(concentrations[ci] * 100)), s);
      save_field(field, out_dir + "/" + name);
      std::printf("%s  floes=%zu  concentration=%.4f\n", name, field.floes.size(),
                  field.concentration);
    }
  }
  return 0;
}

int cmd_run(const std::string& planner, const std::string& field_path,
            const std::string& config_path, unsigned seed, const std::string& out_path) {
  const IceField field = load_field(field_path);
  const ExperimentSpec spec = load_spec(config_path);
  const TrialRecord rec = run_trial(field, planner, spec.trial, seed);
  const nlohmann::json j = trial_to_json(rec);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << j.dump(1) << "\n";
  }
  const auto& m = rec.metrics;
  std::printf("planner=%s events=%zu mean_impact=%.6g N max_impact=%.6g N dk_ship=%.6g J\n",
              planner.c_str(), rec.events.size(), m.mean_impact_force, m.max_impact_force,
              m.dk_ship_total);
  std::printf("energy=%.6g J time=%.1f s path_length=%.2f m cross_track=%.3f m\n", m.energy,
              m.total_time, m.path_length, m.mean_cross_track);
  return 0;
}

int cmd_batch(const std::string& spec_path, const std::string& out_dir, int threads) {
  ExperimentSpec spec = load_spec(spec_path);
  if (!out_dir.empty()) spec.output_dir = out_dir;
  if (threads > 0) spec.threads = threads;
  const auto rows = run_batch(spec);
  std::printf("%-6s %-14s %7s %9s %14s %14s %9s\n", "conc", "planner", "trials", "failures",
              "mean_impact_N", "max_impact_N", "success%");
  for (const auto& row : rows) {
    std::printf("%-6.2f %-14s %7d %9d %14.5g %14.5g %9.1f\n", row.concentration,
                row.planner.c_str(), row.trials, row.failures, row.means.mean_impact_force,
                row.means.max_impact_force, row.success_rate);
  }
  std::printf("wrote %s/summary.csv\n", spec.output_dir.c_str());
  return 0;
}

int cmd_calibrate(const std::string& config_path, int n_fields, double concentration,
                  unsigned seed) {
  ExperimentSpec spec = load_spec(config_path);
  std::vector<TrialRecord> trials;
  for (int fi = 0; fi < n_fields; ++fi) {
    FieldSpec fspec = spec.field_template;
    fspec.target_concentration = concentration;
    const IceField field = generate_field(fspec, seed + fi);
    trials.push_back(run_trial(field, "straight", spec.trial, seed + fi));
    std::printf("trial %d/%d: dK=%.6g J E=%.6g J C_f=%.6g\n", fi + 1, n_fields,
                trials.back().metrics.dk_ship_total, trials.back().metrics.energy,
                trials.back().collision_cost);
  }
  std::printf("alpha = %.8g\n", calibrate_alpha(trials));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"icenav: ship-in-broken-ice navigation experiments"};
  app.require_subcommand(1);

  // gen-fields
  auto* gen = app.add_subcommand("gen-fields", "Generate random ice fields as JSON");
  std::string gen_out = "fields";
  int gen_count = 10;
  std::vector<double> gen_conc;
  unsigned gen_seed = 201;
  FieldSpec tmpl;
  tmpl.thickness = 0.4;
  tmpl.min_width = 2.0;
  tmpl.max_width = 40.0;
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--count", gen_count, "fields per concentration");
  gen->add_option("--concentration", gen_conc, "target concentrations (repeatable)");
  gen->add_option("--seed", gen_seed, "base seed");
  gen->add_option("--length", tmpl.channel_length, "channel length, m");
  gen->add_option("--width", tmpl.channel_width, "channel width, m");
  gen->add_option("--thickness", tmpl.thickness, "floe thickness, m");
  gen->add_option("--min-width", tmpl.min_width, "width truncation lower bound, m");
  gen->add_option("--max-width", tmpl.max_width, "width truncation upper bound, m");

  // run
  auto* run = app.add_subcommand("run", "Run one closed-loop trial");
  std::string run_planner = "auto-icenav", run_field, run_config, run_out;
  unsigned run_seed = 0;
  run->add_option("--planner", run_planner, "auto-icenav | auto-stage1 | straight | skeleton");
  run->add_option("--field", run_field, "field JSON file")->required();
  run->add_option("--config", run_config, "experiment spec JSON (trial settings)");
  run->add_option("--seed", run_seed, "trial seed (recorded in the output)");
  run->add_option("--out", run_out, "write the full trial record JSON here");

  // batch
  auto* batch = app.add_subcommand("batch", "Run a full experiment grid");
  std::string batch_spec, batch_out;
  int batch_threads = 0;
  batch->add_option("--spec", batch_spec, "experiment spec JSON (desk defaults if omitted)");
  batch->add_option("--out", batch_out, "output directory override");
  batch->add_option("--threads", batch_threads, "parallel trials (0: ICENAV_THREADS or cores)");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Calibrate the cost weight from straight trials");
  std::string cal_config;
  int cal_fields = 5;
  double cal_conc = 0.3;
  unsigned cal_seed = 901;
  cal->add_option("--config", cal_config, "experiment spec JSON (trial settings)");
  cal->add_option("--fields", cal_fields, "number of straight trials");
  cal->add_option("--concentration", cal_conc, "field concentration");
  cal->add_option("--seed", cal_seed, "base seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_fields(gen_out, gen_count, gen_conc, gen_seed, tmpl);
    if (run->parsed()) return cmd_run(run_planner, run_field, run_config, run_seed, run_out);
    if (batch->parsed()) return cmd_batch(batch_spec, batch_out, batch_threads);
    if (cal->parsed()) return cmd_calibrate(cal_config, cal_fields, cal_conc, cal_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
