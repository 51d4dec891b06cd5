// Python module exposing the core operations: state-space enumeration,
// transition matrices, the state transition field, steady states, spectral
// diagnostics, and the simulation estimators. All ids are 0-based here,
// matching the C++ API; only files written by the command-line tool use
// 1-based ids.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "stf/field.hpp"
#include "stf/io.hpp"
#include "stf/schemes.hpp"
#include "stf/sim.hpp"
#include "stf/state_space.hpp"
#include "stf/steady.hpp"
#include "stf/types.hpp"

namespace py = pybind11;

namespace {

// pybind11's std::variant caster would otherwise shadow the class
// registration, so the scheme rides in a plain holder.
struct SchemeHandle {
  stf::Scheme value;
};

SchemeHandle scheme_from_text(const std::string& text) {
  std::istringstream in(text);
  return {stf::scheme_from_json(stf::parse_json(in, "scheme config"))};
}

py::dict steady_dict(const stf::SteadyStateResult& result) {
  py::dict d;
  d["eta_star"] = result.eta_star.vec();
  d["iterations"] = result.iterations;
  d["residual"] = result.residual;
  d["method"] = stf::steady_method_name(result.method);
  return d;
}

py::dict spectrum_dict(const stf::SpectralReport& report) {
  py::dict d;
  d["eigenvalue_moduli"] = report.eigenvalue_moduli;
  d["largest"] = report.largest;
  d["second_largest_modulus"] = report.second_largest_modulus;
  if (report.second_largest_closed_form) {
    d["second_largest_closed_form"] = *report.second_largest_closed_form;
    d["closed_form_agrees"] = *report.closed_form_agrees;
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(stfcache, m) {
  m.doc() =
      "exact state-transition analysis and simulation of cache replacement "
      "schemes";

  py::class_<SchemeHandle>(m, "Scheme")
      .def("__repr__", [](const SchemeHandle& s) {
        return "Scheme(" + stf::scheme_name(s.value) + ")";
      });
  m.def("make_scheme", &scheme_from_text, py::arg("config_json"),
        "Build a scheme from its JSON config text, e.g. "
        "'{\"scheme\":\"rr\",\"phi\":0.25}'.");

  py::class_<stf::StateSpace>(m, "StateSpace")
      .def(py::init([](int n_contents, int cache_size) {
             return stf::StateSpace::enumerate(n_contents, cache_size);
           }),
           py::arg("n_contents"), py::arg("cache_size"))
      .def_property_readonly("n_contents", &stf::StateSpace::n_contents)
      .def_property_readonly("cache_size", &stf::StateSpace::cache_size)
      .def_property_readonly("n_states", &stf::StateSpace::n_states)
      .def("state", &stf::StateSpace::state, py::arg("k"))
      .def("index_of", &stf::StateSpace::index_of, py::arg("contents"))
      .def("neighbors", &stf::StateSpace::neighbors, py::arg("k"))
      .def("cache_state_matrix", &stf::StateSpace::cache_state_matrix);

  m.def("zipf_popularity",
        [](int n, double exponent) {
          return stf::zipf_popularity(n, exponent).vec();
        },
        py::arg("n_contents"), py::arg("exponent"));

  m.def("conditional_matrix",
        [](const SchemeHandle& scheme, const stf::StateSpace& space,
           const stf::Vector& popularity, int content) {
          return stf::conditional_matrix(scheme.value, space,
                                         stf::Popularity(popularity), content);
        },
        py::arg("scheme"), py::arg("space"), py::arg("popularity"),
        py::arg("content"));

  m.def("overall_matrix",
        [](const SchemeHandle& scheme, const stf::StateSpace& space,
           const stf::Vector& popularity) {
          return stf::overall_matrix(scheme.value, space,
                                     stf::Popularity(popularity));
        },
        py::arg("scheme"), py::arg("space"), py::arg("popularity"));

  m.def("field_at",
        [](const stf::Matrix& theta, const stf::Vector& eta) {
          return stf::field_at(theta, stf::SimplexPoint(eta));
        },
        py::arg("theta"), py::arg("eta"),
        "One-step drift theta @ eta - eta.");

  m.def("scp_to_ccp",
        [](const stf::StateSpace& space, const stf::Vector& eta) {
          return stf::scp_to_ccp(space, stf::SimplexPoint(eta));
        },
        py::arg("space"), py::arg("eta"));

  m.def("hit_probability",
        [](const stf::Vector& popularity, const stf::Vector& ccp) {
          return stf::hit_probability(stf::Popularity(popularity), ccp);
        },
        py::arg("popularity"), py::arg("ccp"));

  m.def("steady_state",
        [](const SchemeHandle& scheme, const stf::StateSpace& space,
           const stf::Vector& popularity) {
          return steady_dict(stf::scheme_steady_state(
              scheme.value, space, stf::Popularity(popularity)));
        },
        py::arg("scheme"), py::arg("space"), py::arg("popularity"),
        "Steady state by the scheme's preferred route.");

  m.def("steady_state_power",
        [](const stf::Matrix& theta, const stf::Vector& eta0, double tol,
           std::uint64_t max_iter) {
          return steady_dict(stf::steady_state_power(
              theta, stf::SimplexPoint(eta0), tol, max_iter));
        },
        py::arg("theta"), py::arg("eta0"), py::arg("tol") = 1e-12,
        py::arg("max_iter") = 10000000);

  m.def("spectral_report",
        [](const stf::Matrix& theta) {
          return spectrum_dict(stf::spectral_report(theta));
        },
        py::arg("theta"));

  m.def("run_trace",
        [](const SchemeHandle& scheme, const stf::Vector& popularity,
           int cache_size, const std::vector<int>& initial,
           std::uint64_t n_requests, std::uint64_t seed,
           const std::optional<stf::StateSpace>& space) {
          const stf::Trajectory trajectory = stf::run_trace(
              scheme.value, stf::Popularity(popularity), cache_size, initial,
              n_requests, seed, space ? &*space : nullptr);
          std::vector<int> contents;
          std::vector<bool> hits;
          std::vector<std::int64_t> states;
          contents.reserve(trajectory.records.size());
          for (const stf::TraceRecord& r : trajectory.records) {
            contents.push_back(r.content);
            hits.push_back(r.hit);
            states.push_back(r.state_index);
          }
          py::dict d;
          d["contents"] = contents;
          d["hits"] = hits;
          d["states"] = states;  // -1 while the cache is filling
          return d;
        },
        py::arg("scheme"), py::arg("popularity"), py::arg("cache_size"),
        py::arg("initial") = std::vector<int>{},
        py::arg("n_requests") = 1000, py::arg("seed") = 1,
        py::arg("space") = std::nullopt,
        "Simulate a request trace. 'states' holds per-request state indices "
        "only when a space is passed; without one every entry is -1, as are "
        "the entries before the cache first fills.");

  m.def("empirical_theta",
        [](const SchemeHandle& scheme, const stf::Vector& popularity,
           const stf::StateSpace& space, std::uint64_t samples_per_state,
           std::uint64_t seed, int threads) {
          return stf::empirical_theta(scheme.value, stf::Popularity(popularity),
                                      space, samples_per_state, seed, threads);
        },
        py::arg("scheme"), py::arg("popularity"), py::arg("space"),
        py::arg("samples_per_state"), py::arg("seed"), py::arg("threads") = 1);

  m.def("empirical_stf",
        [](const SchemeHandle& scheme, const stf::Vector& popularity,
           const stf::StateSpace& space, const stf::Vector& eta,
           std::uint64_t m_realizations, std::uint64_t r_requests,
           std::uint64_t seed, const std::string& mode) {
          if (mode != "categorical" && mode != "trace") {
            throw std::invalid_argument("mode must be categorical or trace");
          }
          return stf::empirical_stf(
              scheme.value, stf::Popularity(popularity), space,
              stf::SimplexPoint(eta), m_realizations, r_requests, seed,
              mode == "categorical" ? stf::StfEstimatorMode::kCategorical
                                    : stf::StfEstimatorMode::kTrace);
        },
        py::arg("scheme"), py::arg("popularity"), py::arg("space"),
        py::arg("eta"), py::arg("m_realizations"), py::arg("r_requests"),
        py::arg("seed"), py::arg("mode") = "categorical");

  m.def("ccp_trajectory",
        [](const SchemeHandle& scheme, const stf::Vector& popularity,
           int cache_size, std::uint64_t n_rounds, std::uint64_t n_requests,
           const std::vector<int>& tracked, std::uint64_t seed, int threads) {
          const stf::CcpEstimate estimate = stf::ccp_trajectory(
              scheme.value, stf::Popularity(popularity), cache_size, n_rounds,
              n_requests, tracked, seed, threads);
          py::dict d;
          d["tracked"] = estimate.tracked;
          d["rounds"] = estimate.rounds;
          d["ccp"] = estimate.ccp;  // request index x tracked content
          return d;
        },
        py::arg("scheme"), py::arg("popularity"), py::arg("cache_size"),
        py::arg("n_rounds"), py::arg("n_requests"), py::arg("tracked"),
        py::arg("seed"), py::arg("threads") = 1);
}
