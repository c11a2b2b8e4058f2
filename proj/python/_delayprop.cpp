#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "delayprop/cases.hpp"
#include "delayprop/errors.hpp"
#include "delayprop/evaluation.hpp"
#include "delayprop/flight_data.hpp"
#include "delayprop/model_io.hpp"
#include "delayprop/query.hpp"
#include "delayprop/synth.hpp"

namespace py = pybind11;
using namespace delayprop;

namespace {

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw py::value_error(std::string("invalid JSON: ") + e.what());
  }
}

py::dict posterior_dict(const Network& net, const std::map<std::string, std::vector<std::string>>& evidence,
                        const std::vector<std::string>& query) {
  json body = {{"evidence", evidence}};
  if (!query.empty()) body["query"] = query;
  const auto q = parse_query(net, body);
  const auto p = posterior(net, q.evidence, q.nodes);
  py::dict out;
  out["posteriors"] = p.posteriors;
  out["expected"] = p.expected;
  out["evidence_logprob"] = p.evidence_logprob;
  return out;
}

std::vector<std::vector<std::string>> labelled(const Network& net, const std::vector<Assignment>& cases) {
  std::vector<std::vector<std::string>> out;
  out.reserve(cases.size());
  for (const auto& a : cases) {
    std::vector<std::string> row;
    for (std::size_t i = 0; i < net.size(); ++i) {
      row.push_back(net.variable(i).states.at(static_cast<std::size_t>(a.at(i))));
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_delayprop, m) {
  m.doc() = "Phase-linked discrete Bayesian networks for flight delay propagation";

  static py::exception<InconsistentEvidence> inconsistent(m, "InconsistentEvidence", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InconsistentEvidence& e) {
      py::set_error(inconsistent, e.what());
    } catch (const EvidenceError& e) {
      py::set_error(PyExc_KeyError, e.what());
    } catch (const ConfigError& e) {
      py::set_error(PyExc_ValueError, e.what());
    } catch (const DataError& e) {
      py::set_error(PyExc_ValueError, e.what());
    }
  });

  py::class_<BinScheme>(m, "BinScheme")
      .def(py::init<std::vector<double>, bool, bool, double>(), py::arg("edges"),
           py::arg("lower_open") = true, py::arg("upper_open") = true, py::arg("tail_halfwidth") = 0.0)
      .def_static("uniform", &BinScheme::uniform, py::arg("lo"), py::arg("hi"), py::arg("width"),
                  py::arg("lower_open") = true, py::arg("upper_open") = true, py::arg("tail_halfwidth") = 0.0)
      .def("__len__", &BinScheme::size)
      .def("bin_index", &BinScheme::bin_index, py::arg("x"))
      .def("midpoint", &BinScheme::midpoint, py::arg("k"))
      .def("midpoints", &BinScheme::midpoints)
      .def("labels", &BinScheme::labels)
      .def_property_readonly("edges", &BinScheme::edges)
      .def_property_readonly("tail_halfwidth", &BinScheme::tail_halfwidth);

  py::class_<Network>(m, "Network")
      .def_static(
          "from_json", [](const std::string& text) { return network_from_json(parse(text)); },
          py::arg("text"), "Build from a config/model document; tables replace the priors when present.")
      .def_static(
          "load", [](const std::string& path) { return network_from_json(load_json_file(path)); },
          py::arg("path"))
      .def("to_json", [](const Network& n) { return to_json(n).dump(1); })
      .def_property_readonly("nodes",
                             [](const Network& n) {
                               std::vector<std::string> out;
                               for (std::size_t i = 0; i < n.size(); ++i) out.push_back(n.name(i));
                               return out;
                             })
      .def("states", [](const Network& n, const std::string& node) { return n.variable(n.require(node)).states; })
      .def("parents",
           [](const Network& n, const std::string& node) {
             std::vector<std::string> out;
             for (auto p : n.parents(n.require(node))) out.push_back(n.name(p));
             return out;
           })
      .def("probabilities",
           [](const Network& n, const std::string& node) {
             const auto& t = n.table(n.require(node));
             std::vector<std::vector<double>> rows;
             for (std::size_t r = 0; r < t.rows(); ++r) rows.push_back(t.row_probabilities(r));
             return rows;
           },
           py::arg("node"), "CPT rows, lexicographic over parent states.")
      .def("posterior", &posterior_dict, py::arg("evidence") = std::map<std::string, std::vector<std::string>>{},
           py::arg("query") = std::vector<std::string>{})
      .def(
          "query_json",
          [](const Network& n, const std::string& body) { return canonical_dump(answer_query(n, parse(body))); },
          py::arg("body"), "Canonical JSON answer, byte-identical to the HTTP service.")
      .def(
          "sample", [](const Network& n, std::size_t count, std::uint64_t seed) {
            return labelled(n, forward_sample(n, count, seed));
          },
          py::arg("n"), py::arg("seed"), "Forward samples as state labels, one list per case.")
      .def(
          "log_likelihood",
          [](const Network& n, const std::vector<std::string>& labels) {
            if (labels.size() != n.size()) throw py::value_error("one label per node expected");
            Assignment a(n.size());
            for (std::size_t i = 0; i < n.size(); ++i) {
              auto k = n.variable(i).state_index(labels[i]);
              if (!k) throw py::key_error("unknown state '" + labels[i] + "' for " + n.name(i));
              a[i] = static_cast<int>(*k);
            }
            return log_likelihood(n, a);
          },
          py::arg("labels"))
      .def(
          "train",
          [](const Network& n, const std::string& cases_csv, std::optional<double> weight) {
            std::istringstream in(cases_csv);
            const auto enc = encode_cases(n, read_cases(in));
            return train(n, enc.cases, weight.value_or(n.spec().case_weight));
          },
          py::arg("cases_csv"), py::arg("weight") = py::none(),
          "Dirichlet-multinomial update from a case CSV (as written by ingest).");

  m.def(
      "derive_gdp",
      [](std::int64_t act_gate_out, double nom_to_min, std::int64_t edct_off_sec, double gate_threshold_min) {
        FlightLegRecord r;
        r.act_gate_out = act_gate_out;
        r.nom_to_min = nom_to_min;
        r.edct_off_sec = edct_off_sec;
        const auto g = derive_gdp(r, GdpOptions{gate_threshold_min});
        return py::make_tuple(g.gdp, g.gdp_time, g.gdp_gate);
      },
      py::arg("act_gate_out"), py::arg("nom_to_min"), py::arg("edct_off_sec"), py::arg("gate_threshold_min") = 0.0,
      "Returns (gdp, gdp_time, gdp_gate).");

  m.def(
      "ingest",
      [](const std::string& records_csv, const std::string& origin, const std::string& dest) {
        std::istringstream in(records_csv);
        const auto parsed = parse_records(in);
        std::ostringstream out;
        write_cases(out, ingest_records(parsed.records, {origin, dest, {}}));
        return py::make_tuple(out.str(), parsed.errors.size());
      },
      py::arg("records_csv"), py::arg("origin") = "", py::arg("dest") = "",
      "Records CSV text -> (case CSV text, skipped row count).");

  m.def(
      "simulate",
      [](std::size_t n, std::uint64_t seed, const std::optional<std::string>& scenario_path) {
        const auto gt = scenario_path ? ground_truth_from_json(load_json_file(*scenario_path)) : default_scenario();
        const auto data = generate(gt, n, seed);
        std::ostringstream out;
        write_records(out, data.records);
        return py::make_tuple(out.str(), labelled(gt.network, data.truth));
      },
      py::arg("n"), py::arg("seed"), py::arg("scenario") = py::none(),
      "Records CSV text and true state labels per case.");

  m.def("default_scenario", [] { return default_scenario().network; },
        "Ground-truth network of the shipped scenario.");

  m.def("expected_value", [](const std::vector<double>& p, const BinScheme& s) { return expected_value(p, s); });
  m.def("map_state", [](const std::vector<double>& p) { return map_state(p); });
  m.def(
      "approx_mse",
      [](const std::vector<std::size_t>& actual, const std::vector<std::size_t>& predicted, const BinScheme& s) {
        return approx_mse(actual, predicted, s);
      },
      py::arg("actual"), py::arg("predicted"), py::arg("scheme"));
  m.def("scaled_mse", &scaled_mse, py::arg("mse_by_weight"));
  m.def("ks_statistic", &ks_statistic, py::arg("a"), py::arg("b"));
  m.def("canonical_json", [](const std::string& text) { return canonical_dump(parse(text)); });
}
