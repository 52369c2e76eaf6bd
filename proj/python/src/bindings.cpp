// Python bindings for the core library (module imjet._core).
#include "imjet/jetcalc.hpp"
#include "imjet/models.hpp"
#include "imjet/parasolve.hpp"
#include "imjet/perron.hpp"
#include "imjet/runner.hpp"
#include "imjet/spectral.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace imjet;

namespace {

SemilinearProblem problem_from_json(const std::string& model_json) {
    return build_problem(nlohmann::json::parse(model_json));
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Inertial-manifold charts, jets and extensions";
    m.attr("__version__") = VERSION_INFO;

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
    py::register_exception<CapabilityError>(m, "CapabilityError", PyExc_RuntimeError);

    py::class_<SpectralOperator>(m, "SpectralOperator")
        .def(py::init<std::vector<double>, std::string>(), py::arg("eigenvalues"), py::arg("label") = "list")
        .def_static("squares", &SpectralOperator::squares, py::arg("K"), py::arg("a") = 1.0)
        .def_static("powers_of_two", &SpectralOperator::powers_of_two, py::arg("K"))
        .def("size", &SpectralOperator::size)
        .def("eigenvalue", &SpectralOperator::lambda, py::arg("k"))
        .def_property_readonly("eigenvalues", &SpectralOperator::eigenvalues);

    m.def("first_gap_index", &first_gap_index, py::arg("A"), py::arg("L"));

    py::class_<LadderLevel>(m, "LadderLevel")
        .def_readonly("N", &LadderLevel::N)
        .def_readonly("gap", &LadderLevel::gap)
        .def_readonly("window_lo", &LadderLevel::window_lo)
        .def_readonly("window_hi", &LadderLevel::window_hi)
        .def_readonly("theta", &LadderLevel::theta);
    py::class_<GapLadder>(m, "GapLadder")
        .def_readonly("L", &GapLadder::L)
        .def_readonly("epsilon", &GapLadder::epsilon)
        .def_readonly("levels", &GapLadder::levels)
        .def("jet_exponent", &GapLadder::jet_exponent, py::arg("k"), py::arg("m"));
    m.def(
        "gap_ladder",
        [](const SpectralOperator& A, double L, int n, double epsilon) {
            LadderOptions o;
            o.epsilon = epsilon;
            return gap_ladder(A, L, n, o);
        },
        py::arg("A"), py::arg("L"), py::arg("n"), py::arg("epsilon") = 0.05);

    m.def("green_gap", &green_gap, py::arg("A"), py::arg("N"), py::arg("theta"));
    m.def(
        "operator_norm_estimate",
        [](const SpectralOperator& A, int N, double theta, double T, double dt) {
            const auto r = operator_norm_estimate(A, N, theta, TimeGrid::covering(-T, 0.0, dt));
            return py::dict(py::arg("estimate") = r.estimate, py::arg("formula") = r.formula,
                            py::arg("iterations") = r.iterations, py::arg("converged") = r.converged);
        },
        py::arg("A"), py::arg("N"), py::arg("theta"), py::arg("T"), py::arg("dt"));

    py::class_<SemilinearProblem>(m, "Problem")
        .def_property_readonly("K", &SemilinearProblem::K)
        .def_readonly("L", &SemilinearProblem::L)
        .def_property_readonly("eigenvalues", [](const SemilinearProblem& p) { return p.A.eigenvalues(); })
        .def("nonlinearity", [](const SemilinearProblem& p, const Vec& u) { return p.F->apply(u); }, py::arg("u"));
    m.def("build_problem", &problem_from_json, py::arg("model_json"),
          "Problem from a model block given as JSON text, e.g. '{\"name\": \"sell\"}'.");

    py::class_<SolverOptions>(m, "SolverOptions")
        .def(py::init<>())
        .def_readwrite("tol", &SolverOptions::tol)
        .def_readwrite("horizon_tol", &SolverOptions::horizon_tol)
        .def_readwrite("T", &SolverOptions::T)
        .def_readwrite("dt", &SolverOptions::dt)
        .def_readwrite("max_iter", &SolverOptions::max_iter);

    py::class_<ManifoldChart>(m, "ManifoldChart")
        .def(py::init<SemilinearProblem, int, double, SolverOptions>(), py::arg("problem"), py::arg("N"),
             py::arg("theta"), py::arg("options") = SolverOptions{})
        .def("__call__", &ManifoldChart::operator(), py::arg("p"))
        .def("full_point", &ManifoldChart::full_point, py::arg("p"))
        .def("jacobian", &ManifoldChart::jacobian, py::arg("p"))
        .def_property_readonly("N", &ManifoldChart::N)
        .def_property_readonly("theta", &ManifoldChart::theta);

    m.def("sell_constants", &sell_constants, py::arg("n_max"));
    m.def("sell_explicit", &sell_explicit, py::arg("t"), py::arg("n"));
    m.def("sell_explicit_defect", &sell_explicit_defect, py::arg("t"), py::arg("n"));
    m.def("sell_manifold_chart", &sell_manifold_chart, py::arg("p"), py::arg("n"), py::arg("beta") = 0.2);
    m.def(
        "sell_c2_obstruction",
        [](int n, int samples) { return sell_c2_obstruction(n, samples).to_json().dump(); }, py::arg("n"),
        py::arg("samples") = 200, "Certificate as JSON text.");

    m.def("loglog_slope",
          [](const std::vector<double>& x, const std::vector<double>& y) { return loglog_slope(x, y); }, py::arg("x"),
          py::arg("y"));

    m.def("config_hash", [](const std::string& cfg) { return config_hash(nlohmann::json::parse(cfg)); }, py::arg("config_json"));
    m.def(
        "run_experiment",
        [](const std::string& cfg, const std::string& out_dir) {
            RunOptions ro;
            ro.out_dir = out_dir;
            py::gil_scoped_release release;
            return run_experiment(nlohmann::json::parse(cfg), ro);
        },
        py::arg("config_json"), py::arg("out_dir") = "", "Runs a config given as JSON text; returns the exit code.");
}
