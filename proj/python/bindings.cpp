#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "seqest/document.hpp"
#include "seqest/exact.hpp"
#include "seqest/intervals.hpp"
#include "seqest/kernels.hpp"
#include "seqest/plan.hpp"
#include "seqest/runtime.hpp"
#include "seqest/sim.hpp"

namespace py = pybind11;
using namespace seqest;

namespace {

PrecisionSpec make_spec(const std::string& scheme, double eps, double eps_a, double eps_r, double delta, double rho,
                        std::optional<double> zeta, double range_lo, double range_hi, std::int64_t stage_count,
                        std::int64_t tau_free, std::int64_t first_stage, double growth) {
  PrecisionSpec s;
  s.scheme = scheme_from_string(scheme);
  s.eps = eps;
  s.eps_a = eps_a;
  s.eps_r = eps_r;
  s.delta = delta;
  s.rho = rho;
  s.zeta = zeta;
  s.range_lo = range_lo;
  s.range_hi = range_hi;
  s.stage_count = stage_count;
  s.tau_free = tau_free;
  s.first_stage = first_stage;
  s.growth = growth;
  return s;
}

py::tuple interval_tuple(const ConfidenceInterval& ci) { return py::make_tuple(ci.lower, ci.upper); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  py::register_exception<SpecError>(m, "SpecError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<DocumentError>(m, "DocumentError", PyExc_ValueError);

  m.def("m_fn", &m_fn);
  m.def("m_inv", &m_inv);
  m.def("kl_bernoulli", &kl_bernoulli);
  m.def("kl_inverse_binomial", &kl_inverse_binomial);
  m.def("g_fn", &g_fn);
  m.def("cp_bounds", [](std::int64_t n, std::int64_t k, double a) { return interval_tuple(cp_bounds(n, k, a)); });
  m.def("ch_bounds", [](std::int64_t n, std::int64_t k, double a) { return interval_tuple(ch_bounds(n, k, a)); });
  m.def("massart_bounds",
        [](std::int64_t n, std::int64_t k, double a) { return interval_tuple(massart_bounds(n, k, a)); });
  m.def("link_transform", &link_transform);

  py::class_<PrecisionSpec>(m, "Spec")
      .def(py::init(&make_spec), py::arg("scheme"), py::arg("eps") = 0.0, py::arg("eps_a") = 0.0,
           py::arg("eps_r") = 0.0, py::arg("delta") = 0.05, py::arg("rho") = 1.0, py::arg("zeta") = py::none(),
           py::arg("range_lo") = 0.0, py::arg("range_hi") = 1.0, py::arg("stage_count") = 0,
           py::arg("tau_free") = 1, py::arg("first_stage") = 0, py::arg("growth") = 1.5)
      .def_property_readonly("scheme", [](const PrecisionSpec& s) { return to_string(s.scheme); })
      .def_readonly("eps", &PrecisionSpec::eps)
      .def_readonly("delta", &PrecisionSpec::delta)
      .def_readonly("zeta", &PrecisionSpec::zeta);

  py::class_<SamplingPlan>(m, "Plan")
      .def_readonly("spec", &SamplingPlan::spec)
      .def_readonly("tau", &SamplingPlan::tau)
      .def_readonly("zeta", &SamplingPlan::zeta)
      .def_readonly("stages", &SamplingPlan::stages)
      .def_readonly("thresholds", &SamplingPlan::thresholds)
      .def_readonly("notes", &SamplingPlan::notes)
      .def("stage_size", &SamplingPlan::stage_size)
      .def("document", [](const SamplingPlan& p) { return render(plan_document(p)); });

  m.def("build_plan", &build_plan);
  m.def("with_stages", &with_stages);
  m.def("plan_from_document", [](const std::string& t) { return plan_from_document(parse_document(t, "plan")); });

  m.def(
      "certify_document",
      [](const SamplingPlan& p, unsigned jobs, const std::string& method) {
        py::gil_scoped_release nogil;
        if (method == "bnb") {
          BnbOptions o;
          o.jobs = jobs;
          return render(certificate_document(certify_branch_and_bound(p, o)));
        }
        CertifyOptions o;
        o.jobs = jobs;
        return render(certificate_document(certify(p, o)));
      },
      py::arg("plan"), py::arg("jobs") = 1, py::arg("method") = "grid");

  m.def("coverage", [](const SamplingPlan& p, double x) {
    const auto r = coverage(CompiledRule(p), x);
    return py::dict(py::arg("p") = r.p, py::arg("coverage") = r.coverage, py::arg("over") = r.over,
                    py::arg("under") = r.under, py::arg("truncation") = r.truncation);
  });

  m.def("stop_distribution", [](const SamplingPlan& p, double x) {
    const auto d = stop_distribution(CompiledRule(p), x);
    std::vector<double> stage;
    for (const auto& s : d.stops) stage.push_back(s.total());
    return py::dict(py::arg("stage_probability") = stage, py::arg("expected_n") = d.expected_sample_size,
                    py::arg("variance_n") = d.sample_size_variance, py::arg("truncation") = d.truncation_error);
  });

  py::class_<EstimationSession>(m, "Session")
      .def(py::init<SamplingPlan, std::optional<std::int64_t>>(), py::arg("plan"), py::arg("budget") = py::none())
      .def("feed", [](EstimationSession& s, double x) { return to_string(s.feed(x)); })
      .def_property_readonly("status", [](const EstimationSession& s) { return to_string(s.status()); })
      .def_property_readonly("sample_count", &EstimationSession::sample_count)
      .def("report_document", [](const EstimationSession& s) { return render(report_document(s.report())); })
      .def("checkpoint", [](const EstimationSession& s) { return render(session_document(s.state())); })
      .def_static("resume", [](const std::string& t) {
        return EstimationSession::restore(session_from_document(parse_document(t, "session")));
      });

  m.def(
      "simulate_document",
      [](const PrecisionSpec& spec, const std::string& truth, std::int64_t reps, std::uint64_t seed, unsigned jobs,
         bool link, bool compare_exact, std::optional<std::int64_t> budget) {
        SimConfig c;
        c.spec = spec;
        c.truth = Truth::parse(truth);
        c.replications = reps;
        c.seed = seed;
        c.jobs = jobs;
        c.link = link;
        c.compare_exact = compare_exact;
        c.budget = budget;
        py::gil_scoped_release nogil;
        return render(sim_document(simulate(c)));
      },
      py::arg("spec"), py::arg("truth"), py::arg("reps"), py::arg("seed"), py::arg("jobs") = 1,
      py::arg("link") = false, py::arg("compare_exact") = false, py::arg("budget") = py::none());
}
