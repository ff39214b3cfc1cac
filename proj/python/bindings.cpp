#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "finsler_amle/app.hpp"
#include "finsler_amle/config.hpp"
#include "finsler_amle/errors.hpp"
#include "finsler_amle/extensions.hpp"
#include "finsler_amle/parallel.hpp"
#include "finsler_amle/solver.hpp"

namespace py = pybind11;
using namespace famle;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

// Node fields are returned as (ny, nx) arrays; nodes outside the closure hold NaN.
py::array_t<double> to_array(const GridDomain& d, const ScalarField& u, bool closure_only) {
  py::array_t<double> out({d.ny(), d.nx()});
  auto a = out.mutable_unchecked<2>();
  for (int x = 0; x < d.size(); ++x) {
    a(d.iy(x), d.ix(x)) = (!closure_only || d.in_closure(x)) ? u[x] : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

ScalarField from_array(const GridDomain& d, const py::array_t<double, py::array::c_style | py::array::forcecast>& u) {
  if (u.ndim() != 2 || u.shape(0) != d.ny() || u.shape(1) != d.nx()) {
    throw InputError("field must have shape (ny, nx) = (" + std::to_string(d.ny()) + ", " + std::to_string(d.nx()) +
                     ")");
  }
  auto a = u.unchecked<2>();
  ScalarField out(d.size());
  for (int x = 0; x < d.size(); ++x) out[x] = a(d.iy(x), d.ix(x));
  return out;
}

class PyProblem {
 public:
  PyProblem(const std::string& text, const std::string& base_dir)
      : config_(parse_config(text, base_dir)), problem_(build_problem(config_)) {}

  static std::unique_ptr<PyProblem> from_preset(const std::string& name) {
    return std::make_unique<PyProblem>(serialize_config(preset(name)), ".");
  }

  std::string config() const { return serialize_config(config_); }
  int nx() const { return problem_.domain.nx(); }
  int ny() const { return problem_.domain.ny(); }
  double h() const { return problem_.domain.h(); }

  py::array_t<std::int8_t> kinds() const {
    const GridDomain& d = problem_.domain;
    py::array_t<std::int8_t> out({d.ny(), d.nx()});
    auto a = out.mutable_unchecked<2>();
    for (int x = 0; x < d.size(); ++x) a(d.iy(x), d.ix(x)) = static_cast<std::int8_t>(d.kind(x));
    return out;
  }

  py::tuple solve() const {
    SolveResult r;
    {
      py::gil_scoped_release release;
      r = famle::solve(*problem_.graph, problem_.g, config_.solver_config());
    }
    return py::make_tuple(to_array(problem_.domain, r.u, true),
                          to_python(solve_report_json(r.report, config_.output.timing)));
  }

  py::tuple mcshane() const {
    return py::make_tuple(to_array(problem_.domain, mcshane_upper(problem_.g, *problem_.graph), true),
                          to_array(problem_.domain, mcshane_lower(problem_.g, *problem_.graph), true));
  }

  py::array_t<double> distance(int i, int j) const {
    if (!problem_.domain.contains(i, j)) throw InputError("source outside the grid");
    ScalarField d;
    {
      py::gil_scoped_release release;
      d = problem_.graph->shortest_distance(problem_.domain.node(i, j)).values;
    }
    return to_array(problem_.domain, d, false);
  }

  py::object verify(const py::array_t<double, py::array::c_style | py::array::forcecast>& u) const {
    const ScalarField field = from_array(problem_.domain, u);
    nlohmann::json out;
    {
      py::gil_scoped_release release;
      out = verify_field(config_, problem_, field);
    }
    return to_python(out);
  }

  double norm(double x, double y, double vx, double vy) const { return structure().eval({x, y}, {vx, vy}); }
  double dual_norm(double x, double y, double wx, double wy) const { return structure().dual_eval({x, y}, {wx, wy}); }

 private:
  const FinslerStructure& structure() const {
    if (!problem_.structure) throw InputError("problem has no Finsler structure");
    return *problem_.structure;
  }

  ProblemConfig config_;
  Problem problem_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "AMLE solver and verifier on Finsler stencil graphs.";

  // Translators run newest first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("presets", &preset_names);
  m.def("preset", [](const std::string& name) { return serialize_config(preset(name)); },
        "Canonical config text of a named preset.");
  m.def("set_threads", &set_thread_count);
  m.def("aronsson", [](double x, double y) { return aronsson({x, y}); });

  py::class_<PyProblem>(m, "Problem")
      .def(py::init<const std::string&, const std::string&>(), py::arg("config"), py::arg("base_dir") = ".")
      .def_static("from_preset", &PyProblem::from_preset)
      .def_property_readonly("config", &PyProblem::config)
      .def_property_readonly("nx", &PyProblem::nx)
      .def_property_readonly("ny", &PyProblem::ny)
      .def_property_readonly("h", &PyProblem::h)
      .def_property_readonly("kinds", &PyProblem::kinds, "0 ambient, 1 interior, 2 boundary; shape (ny, nx).")
      .def("solve", &PyProblem::solve, "Returns (u, report).")
      .def("mcshane", &PyProblem::mcshane, "Returns (psi, phi).")
      .def("distance", &PyProblem::distance, py::arg("i"), py::arg("j"))
      .def("verify", &PyProblem::verify, py::arg("u"))
      .def("norm", &PyProblem::norm, py::arg("x"), py::arg("y"), py::arg("vx"), py::arg("vy"))
      .def("dual_norm", &PyProblem::dual_norm, py::arg("x"), py::arg("y"), py::arg("wx"), py::arg("wy"));
}
