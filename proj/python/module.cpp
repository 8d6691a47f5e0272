#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "capflex/errors.hpp"
#include "capflex/export.hpp"
#include "capflex/pipeline.hpp"
#include "capflex/rigidity.hpp"
#include "capflex/runconfig.hpp"
#include "capflex/snapshot.hpp"
#include "capflex/stage.hpp"

namespace py = pybind11;
using namespace capflex;

namespace {

// opaque snapshot handle keeping the shared anchor/target alive
struct Snapshot {
  std::vector<StageState> states;
};

}  // namespace

PYBIND11_MODULE(_capflex, m) {
  m.doc() = "corrugated isometric immersions of spherical caps over the unit disk";
  m.attr("__version__") = "0.1.0";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<HypothesisFailed>(m, "HypothesisFailed", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("grid", &RunConfig::grid_n)
      .def_readwrite("stages", &RunConfig::stages)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("alpha", &RunConfig::alpha)
      .def_readwrite("pair_budget", &RunConfig::pair_budget)
      .def_readwrite("out_dir", &RunConfig::out_dir)
      .def_readwrite("snapshot_dir", &RunConfig::snapshot_dir)
      .def_readwrite("mesh_stride", &RunConfig::mesh_stride)
      .def_readwrite("cap_radius", &RunConfig::cap_radius)
      .def("set", &RunConfig::set, py::arg("key"), py::arg("value"),
           "assign any config key from its text form")
      .def("load_file", &RunConfig::load_file)
      .def("validate", &RunConfig::validate)
      .def("to_json", &RunConfig::to_json);

  py::class_<BoundaryObservable>(m, "BoundaryObservable")
      .def_readonly("value", &BoundaryObservable::value)
      .def_readonly("y_len_min", &BoundaryObservable::y_len_min)
      .def_readonly("y_len_max", &BoundaryObservable::y_len_max)
      .def_readonly("nodes", &BoundaryObservable::nodes);

  py::class_<ConvergenceRow>(m, "ConvergenceRow")
      .def_readonly("q", &ConvergenceRow::q)
      .def_readonly("measured", &ConvergenceRow::measured)
      .def_readonly("predicted", &ConvergenceRow::predicted)
      .def_readonly("admissible", &ConvergenceRow::admissible);

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("margins_ok", &RunResult::margins_ok)
      .def_readonly("report_json", &RunResult::report_json)
      .def_readonly("convergence", &RunResult::convergence)
      .def_readonly("observable", &RunResult::obs_final)
      .def_readonly("cap_observable", &RunResult::obs_cap)
      .def_readonly("lambda_final", &RunResult::lambda_final)
      .def_property_readonly("stage_reports", [](const RunResult& r) {
        std::vector<std::string> out;
        for (const auto& s : r.stages) out.push_back(s.to_json());
        return out;
      });

  m.def("run_build", &run_build, py::arg("config"),
        py::call_guard<py::gil_scoped_release>(),
        "full pipeline: cap geometry, bootstrap, stages, observables");

  py::class_<Snapshot>(m, "Snapshot")
      .def_property_readonly("stages",
                             [](const Snapshot& s) {
                               std::vector<int> qs;
                               for (const auto& st : s.states) qs.push_back(st.q);
                               return qs;
                             })
      .def("verify",
           [](const Snapshot& s) {
             std::vector<std::string> out;
             for (size_t i = 0; i + 1 < s.states.size(); ++i)
               out.push_back(verify_stage(s.states[i], s.states[i + 1]).to_json());
             return out;
           },
           "re-measured stage conclusions, one JSON report per increment")
      .def("convergence_table",
           [](const Snapshot& s, double alpha, int pair_budget, uint64_t seed) {
             return convergence_table(s.states, alpha, pair_budget, seed);
           },
           py::arg("alpha"), py::arg("pair_budget") = 4096, py::arg("seed") = 1)
      .def("export_mesh",
           [](const Snapshot& s, const std::string& path, int stride) {
             if (s.states.empty()) throw IoError("snapshot holds no states");
             export_mesh(*s.states.back().v, {0, 1, 2}, path, stride);
           },
           py::arg("path"), py::arg("stride") = 1,
           "PLY export of the last saved map, components (0,1,2)")
      .def("rim_trace", [](const Snapshot& s, double radius) {
        if (s.states.empty()) throw IoError("snapshot holds no states");
        const RimSpectrum r = rim_trace_spectrum(*s.states.back().v, 2, radius);
        return py::make_tuple(r.frequency, r.amplitude);
      }, py::arg("radius") = 0.95);

  m.def("load_snapshot",
        [](const std::string& dir) { return Snapshot{load_snapshot(dir)}; },
        py::arg("dir"));

  m.def("cap_observable",
        [](double R, int n) {
          const JetField chart = sample(cap_chart(R), make_grid(n));
          return boundary_observable(chart, R).value;
        },
        py::arg("R") = 2.0, py::arg("grid") = 257,
        "rim observable of the round cap chart, sqrt(1 - 1/R^2) in exact arithmetic");

  m.def("lacunary_ratio_sweep", &lacunary_ratio_sweep, py::arg("alpha"),
        py::arg("j_min"), py::arg("j_max"), py::arg("samples"));
}
