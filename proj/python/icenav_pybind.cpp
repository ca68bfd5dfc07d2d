#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "icenav/costmap.hpp"
#include "icenav/harness.hpp"
#include "icenav/icefield.hpp"
#include "icenav/navigation.hpp"

namespace py = pybind11;
using namespace icenav;

namespace {

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["mean_ice_mass"] = m.mean_ice_mass;
  d["max_impact_force"] = m.max_impact_force;
  d["mean_impact_force"] = m.mean_impact_force;
  d["dk_ship_total"] = m.dk_ship_total;
  d["energy"] = m.energy;
  d["total_time"] = m.total_time;
  d["path_length"] = m.path_length;
  d["mean_cross_track"] = m.mean_cross_track;
  d["mean_heading_error"] = m.mean_heading_error;
  d["w1"] = m.w1;
  d["w2"] = m.w2;
  d["w3"] = m.w3;
  return d;
}

FieldSpec desk_field_spec(double concentration) {
  FieldSpec spec;
  spec.thickness = 0.4;
  spec.min_width = 2.0;
  spec.max_width = 40.0;
  spec.target_concentration = concentration;
  return spec;
}

}  // namespace

PYBIND11_MODULE(_icenav, m) {
  m.doc() = "Ship-in-broken-ice navigation: field generation, costmaps, closed-loop trials";

  py::class_<IceField>(m, "IceField")
      .def_readonly("channel_length", &IceField::channel_length)
      .def_readonly("channel_width", &IceField::channel_width)
      .def_readonly("concentration", &IceField::concentration)
      .def_property_readonly("n_floes", [](const IceField& f) { return f.floes.size(); })
      .def("floe_masses",
           [](const IceField& f) {
             std::vector<double> out;
             for (const auto& fl : f.floes) out.push_back(fl.mass);
             return out;
           })
      .def("floe_polygons",
           [](const IceField& f) {
             std::vector<std::vector<std::pair<double, double>>> out;
             for (const auto& fl : f.floes) {
               std::vector<std::pair<double, double>> poly;
               for (const auto& v : fl.polygon.vertices) poly.emplace_back(v.x, v.y);
               out.push_back(std::move(poly));
             }
             return out;
           })
      .def("to_json", [](const IceField& f) { return field_to_json(f); })
      .def_static("from_json", [](const std::string& s) { return field_from_json(s); });

  m.def(
      "generate_field",
      [](double concentration, unsigned seed, double length, double width, double thickness,
         double min_width, double max_width) {
        FieldSpec spec = desk_field_spec(concentration);
        spec.channel_length = length;
        spec.channel_width = width;
        spec.thickness = thickness;
        spec.min_width = min_width;
        spec.max_width = max_width;
        return generate_field(spec, seed);
      },
      py::arg("concentration"), py::arg("seed"), py::arg("length") = 400.0,
      py::arg("width") = 80.0, py::arg("thickness") = 0.4, py::arg("min_width") = 2.0,
      py::arg("max_width") = 40.0,
      "Procedurally generate a random broken-ice field (desk-scale defaults)");

  m.def("load_field", &load_field, py::arg("path"));
  m.def(
      "save_field", [](const IceField& f, const std::string& p) { save_field(f, p); },
      py::arg("field"), py::arg("path"));

  m.def(
      "build_costmap",
      [](const IceField& field, double u_nominal, double ship_mass, double resolution) {
        CostmapParams params;
        params.grid_resolution = resolution;
        const Costmap map = build_costmap(field, u_nominal, ship_mass, params);
        py::dict out;
        out["n_cols"] = map.grid.n_cols;
        out["n_rows"] = map.grid.n_rows;
        out["resolution"] = map.grid.resolution;
        out["cost"] = map.cost;
        return out;
      },
      py::arg("field"), py::arg("u_nominal") = 2.0, py::arg("ship_mass") = 6e6,
      py::arg("resolution") = 2.0, "Kinetic-energy-loss costmap as a flat row-major grid");

  m.def("ke_loss", &ke_loss, py::arg("d"), py::arg("r_ice"), py::arg("m_ice"),
        py::arg("m_ship"), py::arg("speed"),
        "Kinetic-energy loss of a head-on collision at lateral offset d");

  m.def(
      "run_trial",
      [](const IceField& field, const std::string& planner, unsigned seed) {
        const TrialRecord rec = run_trial(field, planner, desk_trial_config(), seed);
        py::dict out = metrics_dict(rec.metrics);
        out["planner"] = rec.planner;
        out["events"] = rec.events.size();
        out["collision_cost"] = rec.collision_cost;
        return out;
      },
      py::arg("field"), py::arg("planner") = "auto-icenav", py::arg("seed") = 0,
      py::call_guard<py::gil_scoped_release>(),
      "Closed-loop trial with desk-scale settings; returns the metric dict");

  m.def(
      "run_batch",
      [](const std::string& spec_json) {
        const ExperimentSpec spec = experiment_spec_from_json(nlohmann::json::parse(spec_json));
        const auto rows = run_batch(spec);
        py::list out;
        for (const auto& row : rows) {
          py::dict d = metrics_dict(row.means);
          d["concentration"] = row.concentration;
          d["planner"] = row.planner;
          d["trials"] = row.trials;
          d["failures"] = row.failures;
          d["success_rate"] = row.success_rate;
          out.append(d);
        }
        return out;
      },
      py::arg("spec_json"), py::call_guard<py::gil_scoped_release>(),
      "Full experiment grid from an experiment-spec JSON string; returns summary rows");

  m.def("default_experiment_spec_json", [] {
    ExperimentSpec spec;
    spec.trial = desk_trial_config();
    return experiment_spec_to_json(spec).dump(1);
  });
}
