// Python bindings for the core operations: case loading, series power flow,
// sigma indices, nose-point estimation, and weak-bus ranking.

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <complex>
#include <vector>

#include "helmgrid/hem.hpp"
#include "helmgrid/modal.hpp"
#include "helmgrid/netmodel.hpp"
#include "helmgrid/pade.hpp"
#include "helmgrid/sigma.hpp"
#include "helmgrid/version.hpp"
#include "helmgrid/weakbus.hpp"

namespace py = pybind11;
using namespace helmgrid;

namespace {

std::vector<std::complex<double>> to_std(const Eigen::VectorXcd& v) {
    return {v.data(), v.data() + v.size()};
}

py::dict solve_case(const NetworkModel& model, double lambda, int n_terms,
                    const std::string& method) {
    EmbeddedSystem sys = embed(model, EmbeddingMode::all_scaling(lambda));
    HemSolution sol = compute_series(sys, n_terms);
    EvalMethod ev = method == "direct" ? EvalMethod::DirectSum : EvalMethod::Pade;
    Eigen::VectorXcd v = evaluate_solution(sol, 1.0, ev);
    py::dict out;
    py::list buses;
    for (const auto& b : model.buses) buses.append(b.id);
    out["bus_ids"] = buses;
    out["voltages"] = to_std(v);
    out["residual"] = power_balance_residual(model, v, lambda);
    out["n_terms"] = n_terms;
    return out;
}

py::dict snbp_case(const NetworkModel& model, double ceiling, int n_terms, int threads) {
    SnbpScanSpec scan;
    scan.lambda_ceiling = ceiling;
    scan.n_terms = n_terms;
    SnbpEstimate est = estimate_snbp(model, scan, threads);
    py::dict out;
    out["lambda_star"] = est.lambda_star ? py::cast(*est.lambda_star) : py::none();
    out["detecting_bus"] = est.detecting_bus;
    out["lambda_pole_zero"] =
        est.lambda_pole_zero ? py::cast(*est.lambda_pole_zero) : py::none();
    out["scan_trace"] = est.scan_trace;
    return out;
}

py::list sigma_case(const NetworkModel& model, double lambda, int n_terms) {
    py::list out;
    for (const auto& ix : sigma_indices(model, lambda, n_terms)) {
        py::dict d;
        d["bus"] = ix.bus;
        d["sigma"] = ix.sigma;
        d["condition"] = ix.condition;
        d["u"] = ix.u;
        out.append(d);
    }
    return out;
}

py::dict weakbus_case(const NetworkModel& model, int top_k, double dq, int threads) {
    WeakBusRanking r = rank_weak_buses(model, top_k, dq, threads);
    py::dict out;
    py::list ranked, excluded;
    for (const auto& rec : r.ranked) {
        py::dict d;
        d["bus"] = rec.bus;
        d["dv_dq"] = rec.dv_dq;
        d["sign"] = rec.sign;
        ranked.append(d);
    }
    for (const auto& rec : r.excluded) {
        py::dict d;
        d["bus"] = rec.bus;
        d["reason"] = rec.exclusion_reason;
        excluded.append(d);
    }
    out["ranked"] = ranked;
    out["excluded"] = excluded;
    return out;
}

py::dict newton_case(const NetworkModel& model) {
    SolvedState st = newton_solve(model);
    py::dict out;
    out["converged"] = st.converged;
    out["iterations"] = st.iterations;
    out["voltages"] = to_std(st.voltages);
    out["max_mismatch"] = st.max_mismatch;
    return out;
}

}  // namespace

PYBIND11_MODULE(_helmgrid, m) {
    m.doc() = "holomorphic-embedding power flow and voltage stability toolkit";
    m.attr("__version__") = kVersion;

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<SolveError>(m, "SolveError", PyExc_RuntimeError);
    py::register_exception<EmbeddingError>(m, "EmbeddingError", PyExc_RuntimeError);

    py::class_<NetworkModel>(m, "NetworkModel")
        .def_property_readonly("n_buses", &NetworkModel::size)
        .def_property_readonly("bus_ids",
                               [](const NetworkModel& mm) {
                                   std::vector<int> ids;
                                   for (const auto& b : mm.buses) ids.push_back(b.id);
                                   return ids;
                               })
        .def("to_json", &to_case_json);

    m.def("load_case", &load_case, py::arg("path"),
          "Load a MATPOWER .m or internal .json case file.");
    m.def("parse_matpower", &parse_matpower, py::arg("text"));
    m.def("parse_case_json", &parse_case_json, py::arg("text"));
    m.def("scale_injections", &scale_injections, py::arg("model"), py::arg("lambda_"));
    m.def("solve", &solve_case, py::arg("model"), py::arg("lambda_") = 1.0,
          py::arg("n_terms") = 30, py::arg("method") = "pade",
          "Series power flow at the given loading; returns voltages and residual.");
    m.def("newton_solve", &newton_case, py::arg("model"));
    m.def("estimate_snbp", &snbp_case, py::arg("model"), py::arg("ceiling") = 5.0,
          py::arg("n_terms") = 50, py::arg("threads") = 1,
          "Saddle-node bifurcation point estimates from the two-bus indices.");
    m.def("sigma_indices", &sigma_case, py::arg("model"), py::arg("lambda_") = 1.0,
          py::arg("n_terms") = 50);
    m.def("rank_weak_buses", &weakbus_case, py::arg("model"), py::arg("top_k") = 0,
          py::arg("dq") = -1.0, py::arg("threads") = 1);
    m.def("vq_sensitivity", &vq_sensitivity, py::arg("model"), py::arg("bus_id"),
          py::arg("dq"));
}
