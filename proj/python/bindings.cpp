#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ruledmin/catalog.hpp"
#include "ruledmin/error.hpp"
#include "ruledmin/family.hpp"
#include "ruledmin/report.hpp"
#include "ruledmin/ruled.hpp"
#include "ruledmin/surface.hpp"

namespace py = pybind11;
using namespace ruledmin;

namespace {

RunConfig make_config(const std::string& surface, std::uint64_t seed, std::size_t samples,
                      const std::map<std::string, std::string>& settings) {
  RunConfig c;
  c.surface = surface;
  c.seed = seed;
  c.samples = samples;
  for (const auto& [key, value] : settings) apply_setting(c, key, value);
  c.validate();
  return c;
}

ConePoint cone_point(double s, double u, double v, const Eigen::VectorXd& t) { return {s, {u, v}, t}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Ruled minimal submanifolds built on 1-isotropic surfaces";

  static PyObject* geometry_error = py::exception<GeometryError>(m, "GeometryError").release().ptr();
  static PyObject* config_error = py::exception<ConfigError>(m, "ConfigError", PyExc_ValueError).release().ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const GeometryError& e) {
      py::object err = py::reinterpret_borrow<py::object>(geometry_error)(e.what());
      err.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(geometry_error, err.ptr());
    } catch (const ConfigError& e) {
      PyErr_SetString(config_error, e.what());
    }
  });

  m.def("catalog_names", &catalog_names);
  m.def("catalog_manifest", &catalog_manifest_json, py::arg("seed") = 1, "Manifest as a JSON string");

  const auto command = [&m](const char* name, Report (*fn)(const RunConfig&)) {
    m.def(
        name,
        [fn](const std::string& surface, std::uint64_t seed, std::size_t samples,
             const std::map<std::string, std::string>& settings) {
          const RunConfig c = make_config(surface, seed, samples, settings);
          py::gil_scoped_release release;
          return fn(c).to_json();
        },
        py::arg("surface"), py::arg("seed") = 1, py::arg("samples") = 100,
        py::arg("settings") = std::map<std::string, std::string>{}, "Run the command; returns the JSON report");
  };
  command("surface_verify", &cmd_surface_verify);
  command("ruled_verify", &cmd_ruled_verify);
  command("family_sweep", &cmd_family_sweep);

  m.def(
      "surface_point",
      [](const std::string& surface, double u, double v) { return load_entry(surface, false).model.value({u, v}); },
      py::arg("surface"), py::arg("u"), py::arg("v"));
  m.def(
      "curvature_ellipse",
      [](const std::string& surface, double u, double v) {
        const CurvatureEllipse e = curvature_ellipse(load_entry(surface, false).model, {u, v});
        return py::make_tuple(e.kappa, e.mu);
      },
      py::arg("surface"), py::arg("u"), py::arg("v"), "(kappa, mu) of the first curvature ellipse");
  m.def(
      "cone_point",
      [](const std::string& surface, double s, double u, double v, const Eigen::VectorXd& t) {
        return eval_G(load_entry(surface, false).model, cone_point(s, u, v, t));
      },
      py::arg("surface"), py::arg("s"), py::arg("u"), py::arg("v"), py::arg("t"), "G(s, p, v)");
  m.def(
      "is_singular",
      [](const std::string& surface, double s, double u, double v, const Eigen::VectorXd& t) {
        return is_singular(load_entry(surface, false).model, cone_point(s, u, v, t));
      },
      py::arg("surface"), py::arg("s"), py::arg("u"), py::arg("v"), py::arg("t"));
  m.def(
      "shape_operators",
      [](const std::string& surface, double s, double u, double v, const Eigen::VectorXd& t, bool oracle) {
        const SurfaceModel model = load_entry(surface, false).model;
        const ConePoint cp = cone_point(s, u, v, t);
        if (oracle) {
          const FdShapeData fd = shape_operators_fd(model, cp);
          return py::make_tuple(fd.a_xi, fd.a_eta, fd.omega);
        }
        const ShapeData d = shape_operators(model, cp);
        return py::make_tuple(d.a_xi, d.a_eta, d.omega);
      },
      py::arg("surface"), py::arg("s"), py::arg("u"), py::arg("v"), py::arg("t"), py::arg("oracle") = false,
      "(A_xi, A_eta, Omega); oracle=True uses finite differences of G");
  m.def(
      "norm_sq",
      [](const std::string& surface, double s, double u, double v, const Eigen::VectorXd& t) {
        return second_form_invariants(load_entry(surface, false).model, cone_point(s, u, v, t)).norm_sq;
      },
      py::arg("surface"), py::arg("s"), py::arg("u"), py::arg("v"), py::arg("t"));
  m.def(
      "family_member",
      [](const std::string& surface, double s, double u, double v, const Eigen::VectorXd& t, double theta) {
        const FamilyMember mem = rotate_family(load_entry(surface, false).model, cone_point(s, u, v, t), theta);
        return py::make_tuple(mem.a_xi, mem.a_eta, mem.omega);
      },
      py::arg("surface"), py::arg("s"), py::arg("u"), py::arg("v"), py::arg("t"), py::arg("theta"));
}
