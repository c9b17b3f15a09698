// Thin bindings: costs, the dual solver, scenarios and reports.
#include "otlab/report.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace otlab;

namespace {

using XY = std::array<double, 2>;

Point2 pt(const XY& a) { return {a[0], a[1]}; }
XY xy(const Eigen::Vector2d& v) { return {v.x(), v.y()}; }

py::dict solve(const std::string& cost, const std::string& source, const std::vector<XY>& points,
               std::vector<double> weights, const std::string& target, int resolution, double contrast, int block,
               double tol, int max_iter) {
  Region src = Region::with_resolution(parse_region_spec(source), resolution);
  const SourceDensity mu = contrast > 1.0 ? SourceDensity::checkerboard(std::move(src), contrast, block)
                                          : SourceDensity::uniform(std::move(src));
  std::vector<Point2> pts;
  for (const auto& p : points) pts.push_back(pt(p));
  const DiscreteTarget nu =
      DiscreteTarget::from_points(Region::with_resolution(parse_region_spec(target), resolution), pts, weights);
  nu.validate();
  const CostFunction c = CostFunction::from_name(cost);
  std::optional<DualSolveResult> sol;
  {
    py::gil_scoped_release release;
    sol = solve_dual(c, mu, nu, {tol, max_iter});
  }
  const DualSolveResult& r = *sol;
  py::dict d;
  d["lambda"] = r.potential.lambda();
  d["masses"] = r.masses;
  d["residual"] = r.residual;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  return d;
}

py::dict verify_cost(const std::string& name, std::size_t samples, std::uint64_t seed) {
  const CostFunction cost = CostFunction::from_name(name);
  const auto dom = admissible_domains(cost.id());
  const Region src = Region::with_resolution(parse_region_spec(dom.source), 256);
  const Region tgt = Region::with_resolution(parse_region_spec(dom.target), 256);
  const auto st = verify_structural(cost, src, tgt, samples, seed);
  const auto lp = loeper_sweep(cost, src, tgt, samples, seed);
  py::dict d;
  d["twist_ok"] = st.twist_ok;
  d["nondeg_ok"] = st.nondeg_ok;
  d["mtw_ok"] = st.mtw_ok;
  d["min_abs_det"] = st.min_abs_det;
  d["min_mtw"] = st.min_mtw;
  d["loeper_max_violation"] = lp.max_violation;
  d["loeper_evaluated"] = lp.evaluated;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Semi-discrete optimal transport and isolated singularity lab";

  py::register_exception<Error>(m, "OtlabError", PyExc_RuntimeError);

  py::class_<CostFunction>(m, "Cost")
      .def(py::init(&CostFunction::from_name), py::arg("name"))
      .def_property_readonly("name", &CostFunction::name)
      .def("__call__", [](const CostFunction& c, XY x, XY xb) { return c.eval(pt(x), pt(xb)); })
      .def("grad_x", [](const CostFunction& c, XY x, XY xb) { return xy(c.grad_x(pt(x), pt(xb))); })
      .def("c_exp", [](const CostFunction& c, XY x, XY p) { return xy(c_exp(c, pt(x), pt(p))); },
           py::arg("x"), py::arg("p"))
      .def(
          "mtw",
          [](const CostFunction& c, XY x, XY xb, XY v, XY eta) {
            return mtw_term(c, MtwEvaluation::make(pt(x), pt(xb), pt(v), pt(eta)));
          },
          py::arg("x"), py::arg("xbar"), py::arg("v"), py::arg("eta"))
      .def("__repr__", [](const CostFunction& c) { return "Cost('" + c.name() + "')"; });

  m.def("solve", &solve, py::arg("cost"), py::arg("source"), py::arg("points"),
        py::arg("weights") = std::vector<double>{}, py::arg("target") = "square", py::arg("resolution") = 128,
        py::arg("contrast") = 1.0, py::arg("block") = 8, py::arg("tol") = 1e-10, py::arg("max_iter") = 100,
        "Solve the dual for a uniform (or checkerboard when contrast > 1) source and explicit points.");
  m.def("verify_cost", &verify_cost, py::arg("name"), py::arg("samples") = 20000, py::arg("seed") = 1);

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("name", &Scenario::name)
      .def_readwrite("resolution", &Scenario::resolution)
      .def_readwrite("seed", &Scenario::seed)
      .def_property_readonly("cost", [](const Scenario& s) { return to_string(s.cost); })
      .def_property_readonly("analyses",
                             [](const Scenario& s) {
                               std::vector<std::string> out;
                               for (auto a : s.analyses) out.push_back(to_string(a));
                               return out;
                             })
      .def_readonly("entries", &Scenario::entries);
  m.def("parse_scenario", &parse_scenario, py::arg("text"), py::arg("origin") = "<string>");
  m.def("load_scenario", &load_scenario, py::arg("path"));

  py::class_<Verdict>(m, "Verdict")
      .def_readonly("name", &Verdict::name)
      .def_readonly("passed", &Verdict::pass)
      .def_readonly("detail", &Verdict::detail)
      .def("__repr__", [](const Verdict& v) { return std::string(v.pass ? "PASS " : "FAIL ") + v.name + ": " + v.detail; });

  py::class_<RunReport>(m, "Report")
      .def_readonly("verdicts", &RunReport::verdicts)
      .def_readonly("residual", &RunReport::residual)
      .def_readonly("iterations", &RunReport::iterations)
      .def_readonly("masses", &RunReport::masses)
      .def_property_readonly("lambda", [](const RunReport& r) { return r.phi ? r.phi->lambda() : std::vector<double>{}; })
      .def_property_readonly("all_pass", &RunReport::all_pass)
      .def("export_csv", &export_csv, py::arg("dir"))
      .def("svg", [](const RunReport& r, const std::string& layer) { return svg_document(r, parse_svg_layer(layer)); })
      .def_property_readonly("layers",
                             [](const RunReport& r) {
                               std::vector<std::string> out;
                               for (auto l : available_layers(r)) out.push_back(to_string(l));
                               return out;
                             })
      .def("json", &report_json);

  m.def(
      "run",
      [](const Scenario& s) {
        py::gil_scoped_release release;
        return run_scenario(s);
      },
      py::arg("scenario"));
}
