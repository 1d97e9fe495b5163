#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fpl/algorithms.hpp"
#include "fpl/bounds.hpp"
#include "fpl/config.hpp"
#include "fpl/harness.hpp"
#include "fpl/probability.hpp"
#include "fpl/report.hpp"

namespace py = pybind11;

namespace {

fpl::ScheduleSpec make_schedule(const std::string& name, double epsilon, double K) {
  if (name == "static") return fpl::schedule::Static{epsilon};
  if (name == "inv_sqrt_t") return fpl::schedule::InvSqrtT{};
  if (name == "sqrt_K_over_2t") return fpl::schedule::SqrtKOver2t{K};
  if (name == "self_confident") return fpl::schedule::SelfConfident{K, {}};
  if (name == "self_confident_actual") return fpl::schedule::SelfConfidentActual{K};
  if (name == "adaptive_smin_general") return fpl::schedule::AdaptiveSminGeneral{};
  if (name == "adaptive_smin_uniform") return fpl::schedule::AdaptiveSminUniform{K};
  throw fpl::InvalidArgument("unknown schedule '" + name + "'");
}

fpl::PredictorKind make_kind(const std::string& name) {
  if (name == "fpl") return fpl::PredictorKind::fpl;
  if (name == "ifpl") return fpl::PredictorKind::ifpl;
  if (name == "fl") return fpl::PredictorKind::fl;
  if (name == "fl_penalized") return fpl::PredictorKind::fl_penalized;
  throw fpl::InvalidArgument("unknown predictor kind '" + name + "'");
}

fpl::WeightMethod make_method(const std::string& name) {
  if (name == "inclusion_exclusion") return fpl::WeightMethod::inclusion_exclusion;
  if (name == "quadrature") return fpl::WeightMethod::quadrature;
  throw fpl::InvalidArgument("exact method must be inclusion_exclusion or quadrature");
}

fpl::ConfigEntries entries_from(const std::map<std::string, std::string>& overrides) {
  fpl::ConfigEntries entries = fpl::default_entries();
  for (const auto& [key, value] : overrides) fpl::set_entry(entries, key, value);
  return entries;
}

py::dict weight_dict(const fpl::WeightVector& w) {
  py::dict d;
  d["weights"] = w.weights;
  d["method"] = std::string(fpl::to_string(w.method));
  d["samples"] = w.samples;
  d["error_estimate"] = w.error_estimate;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Follow the Perturbed Leader: predictors, selection probabilities, regret bounds and experiments.";

  py::register_exception<fpl::InvalidState>(m, "InvalidState", PyExc_RuntimeError);
  py::register_exception<fpl::Unsupported>(m, "Unsupported", PyExc_NotImplementedError);
  py::register_exception<fpl::FormatError>(m, "FormatError", PyExc_ValueError);

  py::class_<fpl::ExpertClass>(m, "ExpertClass")
      .def(py::init([](std::vector<double> k, bool strict) {
             return fpl::ExpertClass(std::move(k), strict ? fpl::ExpertClass::Check::strict
                                                          : fpl::ExpertClass::Check::relaxed);
           }),
           py::arg("complexities"), py::arg("strict") = true)
      .def_static("uniform", &fpl::ExpertClass::uniform, py::arg("n"))
      .def_static("two_log", &fpl::ExpertClass::two_log, py::arg("n"))
      .def_property_readonly("complexities",
                             [](const fpl::ExpertClass& k) {
                               return std::vector<double>(k.complexities().begin(), k.complexities().end());
                             })
      .def_property_readonly("weight_sum", &fpl::ExpertClass::weight_sum)
      .def("__len__", &fpl::ExpertClass::size);

  m.def(
      "select_leader",
      [](const std::vector<double>& state, const std::vector<double>& k, const std::vector<double>& q,
         double epsilon) { return fpl::select_leader(state, k, q, epsilon); },
      py::arg("state"), py::arg("k"), py::arg("q"), py::arg("epsilon"),
      "Index minimizing state + (k - q) / epsilon; lowest index on ties.");

  m.def(
      "selection_probabilities",
      [](const std::vector<double>& penalized, double epsilon, const std::string& method) {
        return weight_dict(fpl::selection_probabilities(penalized, epsilon, make_method(method)));
      },
      py::arg("penalized"), py::arg("epsilon"), py::arg("method") = "inclusion_exclusion");

  m.def(
      "selection_probabilities_mc",
      [](const std::vector<double>& penalized, double epsilon, std::size_t samples, std::uint64_t seed,
         unsigned workers) {
        py::gil_scoped_release release;
        return fpl::selection_probabilities_mc(penalized, epsilon, samples, seed, workers).weights;
      },
      py::arg("penalized"), py::arg("epsilon"), py::arg("samples"), py::arg("seed") = 0, py::arg("workers") = 1);

  m.def(
      "shifted_exp_max_estimate",
      [](const fpl::ExpertClass& k, std::size_t samples, std::uint64_t seed, unsigned workers) {
        fpl::ShiftedMaxEstimate e;
        {
          py::gil_scoped_release release;
          e = fpl::shifted_exp_max_estimate(k, samples, seed, workers);
        }
        py::dict d;
        d["mean"] = e.mean;
        d["standard_error"] = e.standard_error;
        d["samples"] = e.samples;
        return d;
      },
      py::arg("experts"), py::arg("samples"), py::arg("seed") = 0, py::arg("workers") = 1);

  m.def(
      "bound_value",
      [](const std::string& theorem, py::kwargs params) {
        fpl::BoundRequest r;
        r.theorem = fpl::theorem_from_string(theorem);
        for (const auto& [key, value] : params) {
          const std::string name = py::cast<std::string>(key);
          const double v = py::cast<double>(value);
          if (name == "L") r.L = v;
          else if (name == "K") r.K = v;
          else if (name == "T") r.T = v;
          else if (name == "k_i") r.k_i = v;
          else if (name == "s_i") r.s_i = v;
          else if (name == "s_min") r.s_min = v;
          else if (name == "eps_T") r.eps_T = v;
          else if (name == "n") r.n = v;
          else throw fpl::InvalidArgument("unknown bound parameter '" + name + "'");
        }
        return fpl::bound_value(r);
      },
      py::arg("theorem"));

  m.def(
      "high_probability_envelope",
      [](double expected, double c) {
        const fpl::Envelope e = fpl::high_probability_envelope(expected, c);
        py::dict d;
        d["markov_threshold"] = e.markov_threshold;
        d["markov_failure"] = e.markov_failure;
        d["chernoff_halfwidth"] = e.chernoff_halfwidth;
        d["chernoff_failure"] = e.chernoff_failure;
        d["chernoff_valid"] = e.chernoff_valid;
        return d;
      },
      py::arg("expected"), py::arg("c"));

  py::class_<fpl::Predictor>(m, "Predictor")
      .def(py::init([](const std::string& kind, const fpl::ExpertClass& experts, const std::string& schedule,
                       double epsilon, double K, std::uint64_t seed, bool initial_only) {
             const auto mode = initial_only ? fpl::PerturbationMode::initial_only : fpl::PerturbationMode::per_step;
             return fpl::Predictor(make_kind(kind), experts, make_schedule(schedule, epsilon, K),
                                   fpl::PerturbationSource(seed, mode));
           }),
           py::arg("kind"), py::arg("experts"), py::arg("schedule") = "inv_sqrt_t", py::arg("epsilon") = 0.1,
           py::arg("K") = 1.0, py::arg("seed") = 0, py::arg("initial_only") = false)
      .def_property_readonly("step", &fpl::Predictor::step)
      .def("epsilon", &fpl::Predictor::epsilon)
      .def("decide", &fpl::Predictor::decide)
      .def("decide_infeasible", [](fpl::Predictor& p, std::vector<double> s) {
        return p.decide_infeasible(fpl::LossVector(std::move(s)));
      })
      .def("weights", [](fpl::Predictor& p) { return weight_dict(p.weights(fpl::EstimatorOptions{})); })
      .def("master_weights",
           [](fpl::Predictor& p) {
             const auto w = p.master_weights(fpl::EstimatorOptions{});
             return std::vector<double>(w.values().begin(), w.values().end());
           })
      .def("observe", [](fpl::Predictor& p, std::vector<double> s) { p.observe(fpl::LossVector(std::move(s))); })
      .def_property_readonly("realized_loss", &fpl::Predictor::realized_loss_prefix)
      .def_property_readonly("cumulative", [](const fpl::Predictor& p) {
        return std::vector<double>(p.cumulative().sums().begin(), p.cumulative().sums().end());
      });

  m.def("config_reference", [] {
    std::vector<std::tuple<std::string, std::string, std::string>> out;
    for (const auto& k : fpl::config_reference()) {
      out.emplace_back(std::string(k.key), std::string(k.default_value), std::string(k.help));
    }
    return out;
  });

  m.def(
      "run_experiment",
      [](const std::map<std::string, std::string>& overrides) {
        const fpl::RunConfig config = fpl::make_config(entries_from(overrides));
        fpl::RunRecord run;
        {
          py::gil_scoped_release release;
          run = fpl::run_experiment(config);
        }
        std::ostringstream trace;
        fpl::write_trace_csv(trace, run);
        return py::make_tuple(fpl::summary_json(run, config), trace.str());
      },
      py::arg("config") = std::map<std::string, std::string>{},
      "Runs one experiment. Returns (summary JSON text, trace CSV text).");

  m.def(
      "sweep",
      [](const std::map<std::string, std::string>& overrides) {
        const fpl::RunConfig config = fpl::make_config(entries_from(overrides));
        fpl::SweepReport report;
        {
          py::gil_scoped_release release;
          const auto seeds = fpl::sweep_seeds(config);
          report = fpl::sweep(config, seeds, config.workers);
        }
        return fpl::sweep_json(report, config);
      },
      py::arg("config") = std::map<std::string, std::string>{}, "Seed sweep. Returns the JSON report text.");
}
