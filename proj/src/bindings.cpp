#include "lagranet/consensus.hpp"
#include "lagranet/dispatch.hpp"
#include "lagranet/error.hpp"
#include "lagranet/graph.hpp"
#include "lagranet/harness.hpp"
#include "lagranet/localprox.hpp"
#include "lagranet/metrics.hpp"
#include "lagranet/oracle.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace lagranet;

namespace {

py::dict trace_columns(const std::vector<IterationMetrics>& trace) {
  const auto rows = static_cast<Eigen::Index>(trace.size());
  auto column = [&](double IterationMetrics::*field) {
    Vector v(rows);
    for (Eigen::Index r = 0; r < rows; ++r) v(r) = trace[static_cast<std::size_t>(r)].*field;
    return v;
  };
  Eigen::VectorX<long> ks(rows);
  for (Eigen::Index r = 0; r < rows; ++r) ks(r) = trace[static_cast<std::size_t>(r)].k;
  py::dict out;
  out["k"] = ks;
  out["objective_error"] = column(&IterationMetrics::objective_error);
  out["feasibility"] = column(&IterationMetrics::feasibility);
  out["consensus_residual"] = column(&IterationMetrics::consensus_residual);
  out["w_seminorm"] = column(&IterationMetrics::w_seminorm);
  out["delta_z_norm"] = column(&IterationMetrics::delta_z_norm);
  out["lyapunov"] = column(&IterationMetrics::lyapunov);
  out["duality_gap"] = column(&IterationMetrics::duality_gap);
  return out;
}

py::dict report_dict(const EnvelopeReport& report) {
  py::dict out;
  for (const auto& e : report.envelopes) {
    py::dict d;
    d["evaluated"] = e.evaluated;
    d["skip_reason"] = e.skip_reason;
    d["violations"] = e.violations;
    d["first_violation"] = e.first_violation;
    d["worst_excess"] = e.worst_excess;
    out[py::str(e.name)] = d;
  }
  return out;
}

std::vector<Edge> edges_from(const std::vector<std::tuple<int, int, double>>& raw) {
  std::vector<Edge> edges;
  for (const auto& [i, j, w] : raw) edges.push_back({i, j, w});
  return edges;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Linearized method of multipliers for network consensus and economic dispatch";

  // Messages read "<ErrorCode>: <detail>".
  py::register_exception<Error>(m, "LagranetError", PyExc_RuntimeError);

  py::class_<Network>(m, "Network")
      .def_property_readonly("n", &Network::n)
      .def_property_readonly("p", &Network::p)
      .def_property_readonly("edges",
                             [](const Network& net) {
                               std::vector<std::tuple<int, int, double>> out;
                               for (const auto& e : net.edges()) out.emplace_back(e.i, e.j, e.weight);
                               return out;
                             })
      .def("laplacian", &Network::laplacian)
      .def("apply", [](const Network& net, const Vector& y) { return laplacian_apply(net, y); });

  m.def(
      "build_network",
      [](int n, int p, const std::vector<std::tuple<int, int, double>>& edges) {
        return build_network(n, p, edges_from(edges));
      },
      py::arg("n"), py::arg("p"), py::arg("edges"),
      "Network from 0-based (i, j, weight) edges.");
  m.def("parse_network_json", &parse_network_json, py::arg("text"));

  py::class_<SpectralData>(m, "SpectralData")
      .def_readonly("eigvals", &SpectralData::eigvals)
      .def_readonly("lambda_max", &SpectralData::lambda_max)
      .def_property_readonly("lambda_2", &SpectralData::lambda_2);
  m.def("spectral", &spectral, py::arg("net"));

  py::class_<AlgoParams>(m, "AlgoParams")
      .def_readonly("rho", &AlgoParams::rho)
      .def_readonly("eta", &AlgoParams::eta)
      .def_readonly("certified", &AlgoParams::certified)
      .def_readonly("bound", &AlgoParams::bound);
  m.def("validate_params", &validate_params, py::arg("spec"), py::arg("rho"), py::arg("eta"));
  m.def("suggest_eta", &suggest_eta, py::arg("spec"), py::arg("rho"), py::arg("factor") = kAutoEtaFactor);

  py::class_<LocalProblem>(m, "LocalProblem")
      .def_static("quadratic_box", &LocalProblem::quadratic_box, py::arg("q_diag"), py::arg("q"),
                  py::arg("lo"), py::arg("hi"))
      .def_static("quadratic", &LocalProblem::quadratic, py::arg("q_diag"), py::arg("q"))
      .def_static("absolute_value", &LocalProblem::absolute_value, py::arg("scale"), py::arg("center"))
      .def_property_readonly("dim", &LocalProblem::dim)
      .def("value", [](const LocalProblem& p, const Vector& y) { return p.value(y); });
  m.def(
      "prox_step",
      [](const LocalProblem& prob, const Vector& linear, const Vector& anchor, double eta) {
        return prox_step(prob, linear, anchor, eta);
      },
      py::arg("problem"), py::arg("linear"), py::arg("anchor"), py::arg("eta"));

  py::class_<GeneratorCost>(m, "GeneratorCost")
      .def(py::init([](double a, double b, double c, double lo, double hi) {
             GeneratorCost g{a, b, c, lo, hi};
             g.validate();
             return g;
           }),
           py::arg("a") = 0.0, py::arg("b") = 0.0, py::arg("c") = 0.0, py::arg("lo") = 0.0,
           py::arg("hi") = 0.0)
      .def_readonly("a", &GeneratorCost::a)
      .def_readonly("b", &GeneratorCost::b)
      .def_readonly("c", &GeneratorCost::c)
      .def_readonly("lo", &GeneratorCost::lo)
      .def_readonly("hi", &GeneratorCost::hi);

  py::class_<DispatchProblem>(m, "DispatchProblem")
      .def(py::init<Network, std::vector<GeneratorCost>, Vector>(), py::arg("net"), py::arg("costs"),
           py::arg("demand"))
      .def_property_readonly("n", &DispatchProblem::n)
      .def_property_readonly("total_demand", &DispatchProblem::total_demand)
      .def_property_readonly("demand", &DispatchProblem::demand);

  py::class_<OracleSolution>(m, "OracleSolution")
      .def_readonly("x_star", &OracleSolution::x_star)
      .def_readonly("y_star", &OracleSolution::y_star)
      .def_readonly("f_star", &OracleSolution::f_star)
      .def_readonly("g_star", &OracleSolution::g_star)
      .def_readonly("lambda_star", &OracleSolution::lambda_star)
      .def_readonly("mu", &OracleSolution::mu)
      .def_readonly("method", &OracleSolution::method)
      .def_readonly("interior", &OracleSolution::interior);
  m.def(
      "solve_consensus",
      [](const std::vector<LocalProblem>& probs, const Network& net) { return solve_consensus(probs, net); },
      py::arg("problems"), py::arg("net"));
  m.def("solve_dispatch_bisection", &solve_dispatch_bisection, py::arg("problem"));
  m.def(
      "certify_kkt",
      [](const OracleSolution& sol, const DispatchProblem& prob) {
        const KktReport r = certify_kkt(sol, prob);
        py::dict d;
        d["passed"] = r.passed;
        d["max_violation"] = r.max_violation;
        d["agent_violation"] = r.agent_violation;
        return d;
      },
      py::arg("solution"), py::arg("problem"));

  m.def(
      "run_consensus",
      [](const Network& net, const std::vector<LocalProblem>& probs, const AlgoParams& params, long iters,
         std::optional<Vector> y0) {
        const Vector start = y0 ? *y0 : Vector::Zero(net.dim());
        StackedState st = init_state(net, probs, start);
        run(st, probs, net, params, iters);
        return py::make_tuple(st.y, st.lambda);
      },
      py::arg("net"), py::arg("problems"), py::arg("params"), py::arg("iters"), py::arg("y0") = py::none(),
      "Returns the final (y, lambda).");
  m.def(
      "run_dispatch",
      [](const DispatchProblem& prob, const AlgoParams& params, long iters) {
        DispatchState st = init_dispatch(prob);
        run_dispatch(st, prob, params, iters);
        return py::make_tuple(st.x, st.y, st.lambda);
      },
      py::arg("problem"), py::arg("params"), py::arg("iters"), "Returns the final (x, y, lambda).");

  py::class_<Scenario>(m, "Scenario")
      .def_property_readonly("kind",
                             [](const Scenario& s) {
                               return s.kind == TraceKind::Consensus ? "consensus" : "dispatch";
                             })
      .def_readonly("n", &Scenario::n)
      .def_readonly("p", &Scenario::p)
      .def_readwrite("iters", &Scenario::iters)
      .def_readwrite("rho", &Scenario::rho)
      .def_readwrite("eta", &Scenario::eta)
      .def_readwrite("seed", &Scenario::seed)
      .def_readonly("demand", &Scenario::demand)
      .def("to_json", &scenario_to_json);
  m.def("parse_scenario", &parse_scenario, py::arg("text"));
  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def(
      "gen_ieee118",
      [](std::uint64_t seed, const std::filesystem::path& coeffs) {
        return gen_ieee118(seed, load_coefficients(coeffs));
      },
      py::arg("seed"), py::arg("coeffs"));

  m.def(
      "run_scenario",
      [](const Scenario& s) {
        RunOutcome out;
        {
          py::gil_scoped_release release;
          out = run_scenario(s);
        }
        py::dict d;
        d["trace"] = trace_columns(out.trace);
        d["envelopes"] = report_dict(out.report);
        d["all_passed"] = out.report.all_passed();
        d["eta"] = out.params.eta;
        d["rho"] = out.params.rho;
        d["max_lambda_sum"] = out.max_lambda_sum;
        d["y"] = out.y_final;
        if (s.kind == TraceKind::Dispatch) d["x"] = out.x_final;
        d["csv"] = trace_to_csv(out.trace);
        return d;
      },
      py::arg("scenario"),
      "Runs a scenario; returns trace columns, envelope report and final iterates.");
}
