#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mstnpi/engine.hpp"
#include "mstnpi/io.hpp"
#include "mstnpi/runner.hpp"

namespace py = pybind11;
using namespace mstnpi;

namespace {

// Column-oriented view of a trajectory.
py::dict trajectory_dict(const SimulationConfig& config, const std::vector<StepRecord>& history) {
  const auto rows = static_cast<Eigen::Index>(history.size());
  const auto cols = static_cast<Eigen::Index>(config.observables.size());
  Eigen::VectorXd time(rows), mean_bond(rows);
  Eigen::VectorXi max_bond(rows);
  CMatrix values(rows, cols);
  CVector trace(rows);
  for (Eigen::Index n = 0; n < rows; ++n) {
    const StepRecord& r = history[static_cast<std::size_t>(n)];
    time(n) = r.time;
    max_bond(n) = static_cast<int>(r.bonds.max_dim);
    mean_bond(n) = r.bonds.mean_dim;
    trace(n) = r.trace;
    for (Eigen::Index k = 0; k < cols; ++k) values(n, k) = r.observables[static_cast<std::size_t>(k)];
  }
  std::vector<std::string> labels;
  for (const auto& o : config.observables) labels.push_back(to_string(o.op) + "@" + std::to_string(o.site + 1));
  py::dict d;
  d["time"] = time;
  d["labels"] = labels;
  d["values"] = values;
  d["max_bond"] = max_bond;
  d["mean_bond"] = mean_bond;
  d["trace"] = trace;
  return d;
}

SimulationConfig config_from(const std::string& text) { return parse_config(text); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multisite tensor-network path integral for spin chains in local harmonic baths";
  m.attr("__version__") = MSTNPI_VERSION;

  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);

  m.def("normalize_config", [](const std::string& text) { return format_config(config_from(text)); },
        py::arg("text"), "Parse a key = value config and return it in canonical form.");

  m.def(
      "run",
      [](const std::string& text) {
        const SimulationConfig c = config_from(text);
        std::vector<StepRecord> h;
        {
          py::gil_scoped_release release;
          h = run_engine(c);
        }
        return trajectory_dict(c, h);
      },
      py::arg("config"), "Run the engine for a config text; returns time, values and bond statistics per step.");

  m.def(
      "oracle",
      [](const std::string& text, const std::string& kind) {
        const SimulationConfig c = config_from(text);
        const OracleKind k = parse_oracle_kind(kind);
        std::vector<StepRecord> h;
        {
          py::gil_scoped_release release;
          h = run_oracle(c, k);
        }
        return trajectory_dict(c, h);
      },
      py::arg("config"), py::arg("kind"), "Run a reference oracle: path-sum, dense or exact-diag.");

  py::class_<Engine>(m, "Engine")
      .def(py::init([](const std::string& text) { return Engine(config_from(text)); }), py::arg("config"))
      .def("step", &Engine::step, py::call_guard<py::gil_scoped_release>())
      .def("run", py::overload_cast<std::size_t>(&Engine::run), py::arg("steps"),
           py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("step_count", &Engine::step_count)
      .def(
          "density", [](const Engine& e) { return density_matrix(to_dense(e.density_at()), e.config().model.num_sites, 2); },
          "Dense reduced density matrix of the chain at the current step (site 0 slowest).")
      .def("history", [](const Engine& e) { return trajectory_dict(e.config(), e.history()); });
}
